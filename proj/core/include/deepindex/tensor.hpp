#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "deepindex/common.hpp"

namespace deepindex {

using Shape = std::vector<int>;

// Dense row-major tensor of doubles. Gradient storage is allocated lazily
// and always matches the data shape.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);

    static std::shared_ptr<Tensor> make(Shape shape, double fill = 0.0, bool requires_grad = false);
    static std::shared_ptr<Tensor> from(Shape shape, std::vector<double> values, bool requires_grad = false);

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }

    // 2-D accessors; rows()/cols() assume ndim() <= 2.
    int rows() const;
    int cols() const;
    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols() + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool requires_grad() const { return requires_grad_; }
    void set_requires_grad(bool v) { requires_grad_ = v; }

    std::vector<double>& grad();
    const std::vector<double>* grad_if_any() const { return grad_.empty() ? nullptr : &grad_; }
    void zero_grad();

    double scalar() const;

private:
    Shape shape_;
    std::vector<double> data_;
    std::vector<double> grad_;
    bool requires_grad_ = false;
};

using TensorPtr = std::shared_ptr<Tensor>;

std::size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

// Named trainable tensor (or non-trainable state buffer) of a model.
struct Parameter {
    std::string name;
    TensorPtr value;
};

// Records the backward pass of every executed primitive. backward() replays
// the closures in exact reverse execution order, accumulating additively into
// Tensor::grad, then drops the recorded graph so intermediates are freed.
class Tape {
public:
    void record(std::function<void()> backward_fn);
    void backward(const TensorPtr& loss);
    void reset();
    std::size_t n_nodes() const { return nodes_.size(); }

private:
    std::vector<std::function<void()>> nodes_;
    bool consumed_ = false;
};

}  // namespace deepindex
