#include "deepindex/tensor.hpp"

#include <numeric>
#include <sstream>

namespace deepindex {

std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (int d : s) {
        if (d < 0) throw Error("negative dimension in shape " + shape_str(s));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

Tensor::Tensor(Shape shape, double fill, bool requires_grad)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill), requires_grad_(requires_grad) {}

TensorPtr Tensor::make(Shape shape, double fill, bool requires_grad) {
    return std::make_shared<Tensor>(std::move(shape), fill, requires_grad);
}

TensorPtr Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    auto t = std::make_shared<Tensor>(std::move(shape), 0.0, requires_grad);
    if (values.size() != t->size())
        throw Error("tensor value count " + std::to_string(values.size()) + " does not match shape " +
                    shape_str(t->shape()));
    t->data_ = std::move(values);
    return t;
}

// 1-D tensors act as a single row (biases broadcast over rows).
int Tensor::rows() const {
    return shape_.size() < 2 ? 1 : shape_[0];
}

int Tensor::cols() const {
    if (shape_.empty()) return 1;
    return shape_.size() < 2 ? shape_[0] : shape_[1];
}

std::vector<double>& Tensor::grad() {
    if (grad_.empty()) grad_.assign(data_.size(), 0.0);
    return grad_;
}

void Tensor::zero_grad() {
    grad_.assign(data_.size(), 0.0);
}

double Tensor::scalar() const {
    if (size() != 1) throw Error("scalar() on tensor of shape " + shape_str(shape_));
    return data_[0];
}

void Tape::record(std::function<void()> backward_fn) {
    nodes_.push_back(std::move(backward_fn));
}

void Tape::backward(const TensorPtr& loss) {
    if (loss->size() != 1) throw Error("backward: loss must be scalar, got " + shape_str(loss->shape()));
    if (consumed_ && nodes_.empty())
        throw Error("backward called twice without a new forward pass");
    loss->grad()[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    nodes_.clear();
    consumed_ = true;
}

void Tape::reset() {
    nodes_.clear();
    consumed_ = false;
}

}  // namespace deepindex
