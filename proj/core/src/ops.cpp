#include "deepindex/ops.hpp"

#include <algorithm>
#include <cmath>

namespace deepindex::ops {

namespace {

bool any_grad(std::initializer_list<const TensorPtr*> ts) {
    for (const auto* t : ts)
        if (*t && (*t)->requires_grad()) return true;
    return false;
}

void check_2d(const TensorPtr& t, const char* what) {
    if (t->ndim() > 2) throw Error(std::string(what) + ": expected at most 2-D, got " + shape_str(t->shape()));
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

TensorPtr matmul(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
    check_2d(a, "matmul lhs");
    check_2d(b, "matmul rhs");
    const int n = a->rows(), k = a->cols(), k2 = b->rows(), m = b->cols();
    if (k != k2)
        throw Error("matmul: inner dimensions differ, " + shape_str(a->shape()) + " vs " + shape_str(b->shape()));
    auto out = Tensor::make({n, m});
    const double* ad = a->data().data();
    const double* bd = b->data().data();
    double* od = out->data().data();
    for (int i = 0; i < n; ++i) {
        for (int kk = 0; kk < k; ++kk) {
            const double av = ad[static_cast<std::size_t>(i) * k + kk];
            if (av == 0.0) continue;
            const double* brow = bd + static_cast<std::size_t>(kk) * m;
            double* orow = od + static_cast<std::size_t>(i) * m;
            for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
    if (any_grad({&a, &b})) {
        out->set_requires_grad(true);
        tape.record([a, b, out, n, k, m] {
            const auto& go = out->grad();
            if (a->requires_grad()) {
                auto& ga = a->grad();
                const double* bd2 = b->data().data();
                for (int i = 0; i < n; ++i)
                    for (int kk = 0; kk < k; ++kk) {
                        double s = 0.0;
                        const double* brow = bd2 + static_cast<std::size_t>(kk) * m;
                        const double* grow = go.data() + static_cast<std::size_t>(i) * m;
                        for (int j = 0; j < m; ++j) s += grow[j] * brow[j];
                        ga[static_cast<std::size_t>(i) * k + kk] += s;
                    }
            }
            if (b->requires_grad()) {
                auto& gb = b->grad();
                const double* ad2 = a->data().data();
                for (int i = 0; i < n; ++i)
                    for (int kk = 0; kk < k; ++kk) {
                        const double av = ad2[static_cast<std::size_t>(i) * k + kk];
                        if (av == 0.0) continue;
                        const double* grow = go.data() + static_cast<std::size_t>(i) * m;
                        double* gbrow = gb.data() + static_cast<std::size_t>(kk) * m;
                        for (int j = 0; j < m; ++j) gbrow[j] += av * grow[j];
                    }
            }
        });
    }
    return out;
}

TensorPtr sparse_matmul(Tape& tape, const SparseMatrix& x, const TensorPtr& w) {
    check_2d(w, "sparse_matmul rhs");
    const int n = x.n_rows(), k = w->rows(), m = w->cols();
    if (x.cols != k)
        throw Error("sparse_matmul: row dim " + std::to_string(x.cols) + " vs weight rows " + std::to_string(k));
    auto out = Tensor::make({n, m});
    const double* wd = w->data().data();
    for (int i = 0; i < n; ++i) {
        double* orow = out->data().data() + static_cast<std::size_t>(i) * m;
        for (const auto& [idx, v] : x.rows[static_cast<std::size_t>(i)].pairs) {
            const double* wrow = wd + static_cast<std::size_t>(idx) * m;
            for (int j = 0; j < m; ++j) orow[j] += v * wrow[j];
        }
    }
    if (w->requires_grad()) {
        out->set_requires_grad(true);
        // keep our own copy of the sparse rows; the caller's batch may not outlive the tape
        auto rows = std::make_shared<std::vector<SparseVector>>(x.rows);
        tape.record([rows, w, out, n, m] {
            const auto& go = out->grad();
            auto& gw = w->grad();
            for (int i = 0; i < n; ++i) {
                const double* grow = go.data() + static_cast<std::size_t>(i) * m;
                for (const auto& [idx, v] : (*rows)[static_cast<std::size_t>(i)].pairs) {
                    double* gwrow = gw.data() + static_cast<std::size_t>(idx) * m;
                    for (int j = 0; j < m; ++j) gwrow[j] += v * grow[j];
                }
            }
        });
    }
    return out;
}

TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->shape() != b->shape())
        throw Error("add: shape mismatch " + shape_str(a->shape()) + " vs " + shape_str(b->shape()));
    auto out = Tensor::make(a->shape());
    for (std::size_t i = 0; i < a->size(); ++i) out->data()[i] = a->data()[i] + b->data()[i];
    if (any_grad({&a, &b})) {
        out->set_requires_grad(true);
        tape.record([a, b, out] {
            const auto& go = out->grad();
            if (a->requires_grad()) {
                auto& ga = a->grad();
                for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
            }
            if (b->requires_grad()) {
                auto& gb = b->grad();
                for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
            }
        });
    }
    return out;
}

TensorPtr mul(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->shape() != b->shape())
        throw Error("mul: shape mismatch " + shape_str(a->shape()) + " vs " + shape_str(b->shape()));
    auto out = Tensor::make(a->shape());
    for (std::size_t i = 0; i < a->size(); ++i) out->data()[i] = a->data()[i] * b->data()[i];
    if (any_grad({&a, &b})) {
        out->set_requires_grad(true);
        tape.record([a, b, out] {
            const auto& go = out->grad();
            if (a->requires_grad()) {
                auto& ga = a->grad();
                for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * b->data()[i];
            }
            if (b->requires_grad()) {
                auto& gb = b->grad();
                for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * a->data()[i];
            }
        });
    }
    return out;
}

TensorPtr add_bias(Tape& tape, const TensorPtr& x, const TensorPtr& bias) {
    check_2d(x, "add_bias input");
    const int n = x->rows(), m = x->cols();
    if (static_cast<int>(bias->size()) != m)
        throw Error("add_bias: bias size " + std::to_string(bias->size()) + " vs cols " + std::to_string(m));
    auto out = Tensor::make(x->shape());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            out->data()[static_cast<std::size_t>(i) * m + j] =
                x->data()[static_cast<std::size_t>(i) * m + j] + bias->data()[static_cast<std::size_t>(j)];
    if (any_grad({&x, &bias})) {
        out->set_requires_grad(true);
        tape.record([x, bias, out, n, m] {
            const auto& go = out->grad();
            if (x->requires_grad()) {
                auto& gx = x->grad();
                for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
            }
            if (bias->requires_grad()) {
                auto& gb = bias->grad();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < m; ++j) gb[static_cast<std::size_t>(j)] += go[static_cast<std::size_t>(i) * m + j];
            }
        });
    }
    return out;
}

TensorPtr relu(Tape& tape, const TensorPtr& x) {
    auto out = Tensor::make(x->shape());
    for (std::size_t i = 0; i < x->size(); ++i) out->data()[i] = x->data()[i] > 0.0 ? x->data()[i] : 0.0;
    if (x->requires_grad()) {
        out->set_requires_grad(true);
        tape.record([x, out] {
            const auto& go = out->grad();
            auto& gx = x->grad();
            for (std::size_t i = 0; i < go.size(); ++i)
                if (x->data()[i] > 0.0) gx[i] += go[i];
        });
    }
    return out;
}

TensorPtr sigmoid(Tape& tape, const TensorPtr& x) {
    auto out = Tensor::make(x->shape());
    for (std::size_t i = 0; i < x->size(); ++i) out->data()[i] = stable_sigmoid(x->data()[i]);
    if (x->requires_grad()) {
        out->set_requires_grad(true);
        tape.record([x, out] {
            const auto& go = out->grad();
            auto& gx = x->grad();
            for (std::size_t i = 0; i < go.size(); ++i) {
                const double y = out->data()[i];
                gx[i] += go[i] * y * (1.0 - y);
            }
        });
    }
    return out;
}

TensorPtr tanh_act(Tape& tape, const TensorPtr& x) {
    auto out = Tensor::make(x->shape());
    for (std::size_t i = 0; i < x->size(); ++i) out->data()[i] = std::tanh(x->data()[i]);
    if (x->requires_grad()) {
        out->set_requires_grad(true);
        tape.record([x, out] {
            const auto& go = out->grad();
            auto& gx = x->grad();
            for (std::size_t i = 0; i < go.size(); ++i) {
                const double y = out->data()[i];
                gx[i] += go[i] * (1.0 - y * y);
            }
        });
    }
    return out;
}

TensorPtr softmax_rows(Tape& tape, const TensorPtr& x) {
    check_2d(x, "softmax input");
    const int n = x->rows(), m = x->cols();
    if (m == 0) throw Error("softmax over empty row");
    auto out = Tensor::make(x->shape());
    for (int i = 0; i < n; ++i) {
        const double* xr = x->data().data() + static_cast<std::size_t>(i) * m;
        double* yr = out->data().data() + static_cast<std::size_t>(i) * m;
        const double mx = *std::max_element(xr, xr + m);
        double s = 0.0;
        for (int j = 0; j < m; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            s += yr[j];
        }
        for (int j = 0; j < m; ++j) yr[j] /= s;
    }
    if (x->requires_grad()) {
        out->set_requires_grad(true);
        tape.record([x, out, n, m] {
            const auto& go = out->grad();
            auto& gx = x->grad();
            for (int i = 0; i < n; ++i) {
                const double* yr = out->data().data() + static_cast<std::size_t>(i) * m;
                const double* gr = go.data() + static_cast<std::size_t>(i) * m;
                double dot = 0.0;
                for (int j = 0; j < m; ++j) dot += gr[j] * yr[j];
                for (int j = 0; j < m; ++j) gx[static_cast<std::size_t>(i) * m + j] += yr[j] * (gr[j] - dot);
            }
        });
    }
    return out;
}

TensorPtr concat_cols(Tape& tape, const std::vector<TensorPtr>& xs) {
    if (xs.empty()) throw Error("concat_cols: empty input list");
    const int n = xs[0]->rows();
    int total = 0;
    bool grad = false;
    for (const auto& t : xs) {
        if (t->rows() != n) throw Error("concat_cols: row count mismatch");
        total += t->cols();
        grad = grad || t->requires_grad();
    }
    auto out = Tensor::make({n, total});
    int off = 0;
    for (const auto& t : xs) {
        const int m = t->cols();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) out->at(i, off + j) = t->data()[static_cast<std::size_t>(i) * m + j];
        off += m;
    }
    if (grad) {
        out->set_requires_grad(true);
        tape.record([xs, out, n] {
            int off2 = 0;
            for (const auto& t : xs) {
                const int m = t->cols();
                if (t->requires_grad()) {
                    auto& gt = t->grad();
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < m; ++j)
                            gt[static_cast<std::size_t>(i) * m + j] += out->grad()[static_cast<std::size_t>(i) * out->cols() + off2 + j];
                }
                off2 += m;
            }
        });
    }
    return out;
}

TensorPtr concat_rows(Tape& tape, const std::vector<TensorPtr>& xs) {
    if (xs.empty()) throw Error("concat_rows: empty input list");
    const int m = xs[0]->cols();
    int total = 0;
    bool grad = false;
    for (const auto& t : xs) {
        if (t->cols() != m) throw Error("concat_rows: column count mismatch");
        total += t->rows();
        grad = grad || t->requires_grad();
    }
    auto out = Tensor::make({total, m});
    int off = 0;
    for (const auto& t : xs) {
        std::copy(t->data().begin(), t->data().end(), out->data().begin() + static_cast<std::size_t>(off) * m);
        off += t->rows();
    }
    if (grad) {
        out->set_requires_grad(true);
        tape.record([xs, out, m] {
            int off2 = 0;
            for (const auto& t : xs) {
                if (t->requires_grad()) {
                    auto& gt = t->grad();
                    const double* src = out->grad().data() + static_cast<std::size_t>(off2) * m;
                    for (std::size_t i = 0; i < t->size(); ++i) gt[i] += src[i];
                }
                off2 += t->rows();
            }
        });
    }
    return out;
}

TensorPtr slice_rows(Tape& tape, const TensorPtr& x, int begin, int count) {
    check_2d(x, "slice_rows input");
    const int n = x->rows(), m = x->cols();
    if (begin < 0 || count < 0 || begin + count > n)
        throw Error("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(begin + count) +
                    ") out of " + std::to_string(n) + " rows");
    auto out = Tensor::make({count, m});
    std::copy(x->data().begin() + static_cast<std::size_t>(begin) * m,
              x->data().begin() + static_cast<std::size_t>(begin + count) * m, out->data().begin());
    if (x->requires_grad()) {
        out->set_requires_grad(true);
        tape.record([x, out, begin, m] {
            auto& gx = x->grad();
            const auto& go = out->grad();
            for (std::size_t i = 0; i < go.size(); ++i) gx[static_cast<std::size_t>(begin) * m + i] += go[i];
        });
    }
    return out;
}

TensorPtr transpose(Tape& tape, const TensorPtr& x) {
    check_2d(x, "transpose input");
    const int n = x->rows(), m = x->cols();
    auto out = Tensor::make({m, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out->at(j, i) = x->data()[static_cast<std::size_t>(i) * m + j];
    if (x->requires_grad()) {
        out->set_requires_grad(true);
        tape.record([x, out, n, m] {
            auto& gx = x->grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j) gx[static_cast<std::size_t>(i) * m + j] += out->grad()[static_cast<std::size_t>(j) * n + i];
        });
    }
    return out;
}

TensorPtr sum_all(Tape& tape, const TensorPtr& x) {
    auto out = Tensor::make({1});
    double s = 0.0;
    for (double v : x->data()) s += v;
    out->data()[0] = s;
    if (x->requires_grad()) {
        out->set_requires_grad(true);
        tape.record([x, out] {
            const double g = out->grad()[0];
            auto& gx = x->grad();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
        });
    }
    return out;
}

TensorPtr mean_all(Tape& tape, const TensorPtr& x) {
    if (x->size() == 0) throw Error("mean_all over empty tensor");
    auto out = Tensor::make({1});
    double s = 0.0;
    for (double v : x->data()) s += v;
    const double inv = 1.0 / static_cast<double>(x->size());
    out->data()[0] = s * inv;
    if (x->requires_grad()) {
        out->set_requires_grad(true);
        tape.record([x, out, inv] {
            const double g = out->grad()[0] * inv;
            auto& gx = x->grad();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
        });
    }
    return out;
}

TensorPtr dropout(Tape& tape, const TensorPtr& x, double keep_p, bool train, std::mt19937_64& rng) {
    if (keep_p <= 0.0 || keep_p > 1.0)
        throw ConfigError("dropout keep probability must be in (0,1], got " + std::to_string(keep_p));
    if (!train || keep_p == 1.0) return x;  // identity in eval mode
    auto mask = std::make_shared<std::vector<double>>(x->size());
    const double scale = 1.0 / keep_p;
    for (std::size_t i = 0; i < x->size(); ++i) (*mask)[i] = uniform(rng, 0.0, 1.0) < keep_p ? scale : 0.0;
    auto out = Tensor::make(x->shape());
    for (std::size_t i = 0; i < x->size(); ++i) out->data()[i] = x->data()[i] * (*mask)[i];
    if (x->requires_grad()) {
        out->set_requires_grad(true);
        tape.record([x, out, mask] {
            const auto& go = out->grad();
            auto& gx = x->grad();
            for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * (*mask)[i];
        });
    }
    return out;
}

TensorPtr batchnorm1d(Tape& tape, const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                      const TensorPtr& running_mean, const TensorPtr& running_var, double momentum,
                      bool train, double eps) {
    check_2d(x, "batchnorm input");
    const int n = x->rows(), f = x->cols();
    if (static_cast<int>(gamma->size()) != f || static_cast<int>(beta->size()) != f)
        throw Error("batchnorm: gamma/beta size must equal feature count " + std::to_string(f));
    if (train && n < 2) throw Error("batchnorm requires batch size >= 2 in training mode, got " + std::to_string(n));

    auto out = Tensor::make(x->shape());
    auto xhat = std::make_shared<std::vector<double>>(x->size());
    auto invstd = std::make_shared<std::vector<double>>(static_cast<std::size_t>(f));

    if (train) {
        for (int j = 0; j < f; ++j) {
            double mu = 0.0;
            for (int i = 0; i < n; ++i) mu += x->at(i, j);
            mu /= n;
            double var = 0.0;
            for (int i = 0; i < n; ++i) {
                const double d = x->at(i, j) - mu;
                var += d * d;
            }
            var /= n;
            (*invstd)[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(var + eps);
            for (int i = 0; i < n; ++i)
                (*xhat)[static_cast<std::size_t>(i) * f + j] = (x->at(i, j) - mu) * (*invstd)[static_cast<std::size_t>(j)];
            running_mean->data()[static_cast<std::size_t>(j)] =
                momentum * running_mean->data()[static_cast<std::size_t>(j)] + (1.0 - momentum) * mu;
            running_var->data()[static_cast<std::size_t>(j)] =
                momentum * running_var->data()[static_cast<std::size_t>(j)] + (1.0 - momentum) * var;
        }
    } else {
        for (int j = 0; j < f; ++j) {
            (*invstd)[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(running_var->data()[static_cast<std::size_t>(j)] + eps);
            for (int i = 0; i < n; ++i)
                (*xhat)[static_cast<std::size_t>(i) * f + j] =
                    (x->at(i, j) - running_mean->data()[static_cast<std::size_t>(j)]) * (*invstd)[static_cast<std::size_t>(j)];
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j)
            out->at(i, j) = gamma->data()[static_cast<std::size_t>(j)] * (*xhat)[static_cast<std::size_t>(i) * f + j] +
                            beta->data()[static_cast<std::size_t>(j)];

    if (any_grad({&x, &gamma, &beta})) {
        out->set_requires_grad(true);
        tape.record([x, gamma, beta, out, xhat, invstd, n, f, train] {
            const auto& go = out->grad();
            if (gamma->requires_grad()) {
                auto& gg = gamma->grad();
                for (int j = 0; j < f; ++j) {
                    double s = 0.0;
                    for (int i = 0; i < n; ++i)
                        s += go[static_cast<std::size_t>(i) * f + j] * (*xhat)[static_cast<std::size_t>(i) * f + j];
                    gg[static_cast<std::size_t>(j)] += s;
                }
            }
            if (beta->requires_grad()) {
                auto& gb = beta->grad();
                for (int j = 0; j < f; ++j) {
                    double s = 0.0;
                    for (int i = 0; i < n; ++i) s += go[static_cast<std::size_t>(i) * f + j];
                    gb[static_cast<std::size_t>(j)] += s;
                }
            }
            if (x->requires_grad()) {
                auto& gx = x->grad();
                if (train) {
                    // batch statistics participate in the gradient
                    for (int j = 0; j < f; ++j) {
                        const double gam = gamma->data()[static_cast<std::size_t>(j)];
                        double mean_dy = 0.0, mean_dyx = 0.0;
                        for (int i = 0; i < n; ++i) {
                            const double dy = go[static_cast<std::size_t>(i) * f + j];
                            mean_dy += dy;
                            mean_dyx += dy * (*xhat)[static_cast<std::size_t>(i) * f + j];
                        }
                        mean_dy /= n;
                        mean_dyx /= n;
                        for (int i = 0; i < n; ++i) {
                            const double dy = go[static_cast<std::size_t>(i) * f + j];
                            gx[static_cast<std::size_t>(i) * f + j] +=
                                gam * (*invstd)[static_cast<std::size_t>(j)] *
                                (dy - mean_dy - (*xhat)[static_cast<std::size_t>(i) * f + j] * mean_dyx);
                        }
                    }
                } else {
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < f; ++j)
                            gx[static_cast<std::size_t>(i) * f + j] += go[static_cast<std::size_t>(i) * f + j] *
                                                                       gamma->data()[static_cast<std::size_t>(j)] *
                                                                       (*invstd)[static_cast<std::size_t>(j)];
                }
            }
        });
    }
    return out;
}

TensorPtr embedding_lookup(Tape& tape, const TensorPtr& table, const std::vector<int>& ids) {
    check_2d(table, "embedding table");
    const int v = table->rows(), d = table->cols();
    const int t = static_cast<int>(ids.size());
    auto out = Tensor::make({t, d});
    for (int i = 0; i < t; ++i) {
        const int id = ids[static_cast<std::size_t>(i)];
        if (id >= v) throw Error("embedding_lookup: id " + std::to_string(id) + " out of range " + std::to_string(v));
        if (id < 0) continue;  // pad row stays zero
        std::copy(table->data().begin() + static_cast<std::size_t>(id) * d,
                  table->data().begin() + static_cast<std::size_t>(id + 1) * d,
                  out->data().begin() + static_cast<std::size_t>(i) * d);
    }
    if (table->requires_grad()) {
        out->set_requires_grad(true);
        auto saved = std::make_shared<std::vector<int>>(ids);
        tape.record([table, out, saved, d] {
            auto& gt = table->grad();
            const auto& go = out->grad();
            for (std::size_t i = 0; i < saved->size(); ++i) {
                const int id = (*saved)[i];
                if (id < 0) continue;
                for (int c = 0; c < d; ++c) gt[static_cast<std::size_t>(id) * d + c] += go[i * d + c];
            }
        });
    }
    return out;
}

TensorPtr conv1d(Tape& tape, const TensorPtr& seq, const TensorPtr& filters, const TensorPtr& bias) {
    if (filters->ndim() != 3) throw Error("conv1d: filters must be {window, depth, maps}");
    const int t = seq->rows(), d = seq->cols();
    const int w = filters->dim(0), fd = filters->dim(1), f = filters->dim(2);
    if (fd != d) throw Error("conv1d: filter depth " + std::to_string(fd) + " vs input depth " + std::to_string(d));
    if (static_cast<int>(bias->size()) != f) throw Error("conv1d: bias size vs filter maps mismatch");
    if (t < w)
        throw Error("conv1d: sequence length " + std::to_string(t) + " shorter than window " + std::to_string(w) +
                    "; pad the sequence before convolving");
    const int to = t - w + 1;
    auto out = Tensor::make({to, f});
    const double* sd = seq->data().data();
    const double* fdp = filters->data().data();
    for (int p = 0; p < to; ++p) {
        double* orow = out->data().data() + static_cast<std::size_t>(p) * f;
        for (int j = 0; j < f; ++j) orow[j] = bias->data()[static_cast<std::size_t>(j)];
        for (int u = 0; u < w; ++u) {
            const double* srow = sd + static_cast<std::size_t>(p + u) * d;
            for (int c = 0; c < d; ++c) {
                const double sv = srow[c];
                if (sv == 0.0) continue;
                const double* frow = fdp + (static_cast<std::size_t>(u) * d + c) * f;
                for (int j = 0; j < f; ++j) orow[j] += sv * frow[j];
            }
        }
    }
    if (any_grad({&seq, &filters, &bias})) {
        out->set_requires_grad(true);
        tape.record([seq, filters, bias, out, to, w, d, f] {
            const auto& go = out->grad();
            for (int p = 0; p < to; ++p) {
                const double* grow = go.data() + static_cast<std::size_t>(p) * f;
                if (bias->requires_grad()) {
                    auto& gb = bias->grad();
                    for (int j = 0; j < f; ++j) gb[static_cast<std::size_t>(j)] += grow[j];
                }
                for (int u = 0; u < w; ++u) {
                    for (int c = 0; c < d; ++c) {
                        const std::size_t fidx = (static_cast<std::size_t>(u) * d + c) * f;
                        if (filters->requires_grad()) {
                            const double sv = seq->data()[static_cast<std::size_t>(p + u) * d + c];
                            if (sv != 0.0) {
                                auto& gf = filters->grad();
                                for (int j = 0; j < f; ++j) gf[fidx + j] += sv * grow[j];
                            }
                        }
                        if (seq->requires_grad()) {
                            double s = 0.0;
                            for (int j = 0; j < f; ++j) s += grow[j] * filters->data()[fidx + j];
                            seq->grad()[static_cast<std::size_t>(p + u) * d + c] += s;
                        }
                    }
                }
            }
        });
    }
    return out;
}

TensorPtr chunked_maxpool(Tape& tape, const TensorPtr& x, int p) {
    check_2d(x, "chunked_maxpool input");
    const int t = x->rows(), f = x->cols();
    if (p < 1) throw Error("chunked_maxpool: p must be >= 1");
    if (t < p)
        throw Error("chunked_maxpool: " + std::to_string(t) + " positions cannot fill " + std::to_string(p) + " chunks");
    auto out = Tensor::make({p, f});
    auto argmax = std::make_shared<std::vector<int>>(static_cast<std::size_t>(p) * f);
    const int base = t / p, rem = t % p;
    int start = 0;
    for (int ci = 0; ci < p; ++ci) {
        const int len = base + (ci < rem ? 1 : 0);
        for (int j = 0; j < f; ++j) {
            int best = start;
            double bv = x->at(start, j);
            for (int i = start + 1; i < start + len; ++i)
                if (x->at(i, j) > bv) {  // strict: first occurrence wins ties
                    bv = x->at(i, j);
                    best = i;
                }
            out->at(ci, j) = bv;
            (*argmax)[static_cast<std::size_t>(ci) * f + j] = best;
        }
        start += len;
    }
    if (x->requires_grad()) {
        out->set_requires_grad(true);
        tape.record([x, out, argmax, p, f] {
            auto& gx = x->grad();
            const auto& go = out->grad();
            for (int ci = 0; ci < p; ++ci)
                for (int j = 0; j < f; ++j)
                    gx[static_cast<std::size_t>((*argmax)[static_cast<std::size_t>(ci) * f + j]) * f + j] +=
                        go[static_cast<std::size_t>(ci) * f + j];
        });
    }
    return out;
}

TensorPtr flatten_to_row(Tape& tape, const TensorPtr& x) {
    auto out = Tensor::make({1, static_cast<int>(x->size())});
    out->data() = x->data();
    if (x->requires_grad()) {
        out->set_requires_grad(true);
        tape.record([x, out] {
            auto& gx = x->grad();
            const auto& go = out->grad();
            for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
        });
    }
    return out;
}

TensorPtr bce_with_logits_sum(Tape& tape, const TensorPtr& logits, const TensorPtr& targets) {
    if (logits->shape() != targets->shape())
        throw Error("bce: shape mismatch " + shape_str(logits->shape()) + " vs " + shape_str(targets->shape()));
    auto out = Tensor::make({1});
    double s = 0.0;
    for (std::size_t i = 0; i < logits->size(); ++i) {
        const double z = logits->data()[i], y = targets->data()[i];
        s += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    out->data()[0] = s;
    if (logits->requires_grad()) {
        out->set_requires_grad(true);
        tape.record([logits, targets, out] {
            const double g = out->grad()[0];
            auto& gz = logits->grad();
            for (std::size_t i = 0; i < gz.size(); ++i)
                gz[i] += g * (stable_sigmoid(logits->data()[i]) - targets->data()[i]);
        });
    }
    return out;
}

TensorPtr bce_sum(Tape& tape, const TensorPtr& probs, const TensorPtr& targets) {
    if (probs->shape() != targets->shape())
        throw Error("bce: shape mismatch " + shape_str(probs->shape()) + " vs " + shape_str(targets->shape()));
    constexpr double kLo = 1e-7, kHi = 1.0 - 1e-7;
    auto out = Tensor::make({1});
    double s = 0.0;
    for (std::size_t i = 0; i < probs->size(); ++i) {
        const double c = std::clamp(probs->data()[i], kLo, kHi), y = targets->data()[i];
        s += -(y * std::log(c) + (1.0 - y) * std::log(1.0 - c));
    }
    out->data()[0] = s;
    if (probs->requires_grad()) {
        out->set_requires_grad(true);
        tape.record([probs, targets, out] {
            constexpr double kLo2 = 1e-7, kHi2 = 1.0 - 1e-7;
            const double g = out->grad()[0];
            auto& gp = probs->grad();
            for (std::size_t i = 0; i < gp.size(); ++i) {
                const double p = probs->data()[i];
                if (p <= kLo2 || p >= kHi2) continue;  // clamped cells are flat
                gp[i] += g * (p - targets->data()[i]) / (p * (1.0 - p));
            }
        });
    }
    return out;
}

std::pair<TensorPtr, TensorPtr> lstm_cell(Tape& tape, const TensorPtr& x, const TensorPtr& h_prev,
                                          const TensorPtr& c_prev, const LstmWeights& w) {
    const int n = x->rows(), d = x->cols(), h = w.hidden;
    if (w.w_x->rows() != d || w.w_x->cols() != 4 * h) throw Error("lstm_cell: w_x must be d x 4h");
    if (w.w_h->rows() != h || w.w_h->cols() != 4 * h) throw Error("lstm_cell: w_h must be h x 4h");
    if (static_cast<int>(w.bias->size()) != 4 * h) throw Error("lstm_cell: bias must have 4h entries");
    if (h_prev->rows() != n || h_prev->cols() != h || c_prev->rows() != n || c_prev->cols() != h)
        throw Error("lstm_cell: state shape mismatch");

    // pre-activations z = x*w_x + h_prev*w_h + bias, gate order [i, f, g, o]
    auto z = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n) * 4 * h);
    for (int i = 0; i < n; ++i) {
        double* zr = z->data() + static_cast<std::size_t>(i) * 4 * h;
        for (int j = 0; j < 4 * h; ++j) zr[j] = w.bias->data()[static_cast<std::size_t>(j)];
        for (int c = 0; c < d; ++c) {
            const double xv = x->at(i, c);
            if (xv == 0.0) continue;
            const double* wr = w.w_x->data().data() + static_cast<std::size_t>(c) * 4 * h;
            for (int j = 0; j < 4 * h; ++j) zr[j] += xv * wr[j];
        }
        for (int c = 0; c < h; ++c) {
            const double hv = h_prev->at(i, c);
            if (hv == 0.0) continue;
            const double* wr = w.w_h->data().data() + static_cast<std::size_t>(c) * 4 * h;
            for (int j = 0; j < 4 * h; ++j) zr[j] += hv * wr[j];
        }
    }

    auto gi = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n) * h);
    auto gf = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n) * h);
    auto gg = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n) * h);
    auto go_ = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n) * h);
    auto tc = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n) * h);
    auto h_out = Tensor::make({n, h});
    auto c_out = Tensor::make({n, h});

    const bool peep = w.has_peepholes();
    for (int i = 0; i < n; ++i) {
        const double* zr = z->data() + static_cast<std::size_t>(i) * 4 * h;
        for (int j = 0; j < h; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * h + j;
            const double cp = c_prev->at(i, j);
            double zi = zr[j], zf = zr[h + j];
            if (peep) {
                zi += cp * w.p_i->data()[static_cast<std::size_t>(j)];
                zf += cp * w.p_f->data()[static_cast<std::size_t>(j)];
            }
            (*gi)[k] = stable_sigmoid(zi);
            (*gf)[k] = stable_sigmoid(zf);
            (*gg)[k] = std::tanh(zr[2 * h + j]);
            const double cv = (*gf)[k] * cp + (*gi)[k] * (*gg)[k];
            c_out->at(i, j) = cv;
            double zo = zr[3 * h + j];
            if (peep) zo += cv * w.p_o->data()[static_cast<std::size_t>(j)];
            (*go_)[k] = stable_sigmoid(zo);
            (*tc)[k] = std::tanh(cv);
            h_out->at(i, j) = (*go_)[k] * (*tc)[k];
        }
    }

    const bool grad = x->requires_grad() || h_prev->requires_grad() || c_prev->requires_grad() ||
                      w.w_x->requires_grad() || w.w_h->requires_grad() || w.bias->requires_grad() ||
                      (peep && (w.p_i->requires_grad() || w.p_f->requires_grad() || w.p_o->requires_grad()));
    if (grad) {
        h_out->set_requires_grad(true);
        c_out->set_requires_grad(true);
        tape.record([x, h_prev, c_prev, w, h_out, c_out, gi, gf, gg, go_, tc, n, d, h, peep] {
            const auto& dh = h_out->grad();
            const auto& dc_in = c_out->grad();
            std::vector<double> dz(static_cast<std::size_t>(n) * 4 * h, 0.0);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < h; ++j) {
                    const std::size_t k = static_cast<std::size_t>(i) * h + j;
                    const double dhv = dh[k];
                    const double ov = (*go_)[k], tcv = (*tc)[k];
                    const double dzo = dhv * tcv * ov * (1.0 - ov);
                    double dc = dc_in[k] + dhv * ov * (1.0 - tcv * tcv);
                    if (peep) {
                        dc += dzo * w.p_o->data()[static_cast<std::size_t>(j)];
                        if (w.p_o->requires_grad())
                            w.p_o->grad()[static_cast<std::size_t>(j)] += dzo * c_out->at(i, j);
                    }
                    const double iv = (*gi)[k], fv = (*gf)[k], gv = (*gg)[k];
                    const double cp = c_prev->at(i, j);
                    const double dzf = dc * cp * fv * (1.0 - fv);
                    const double dzi = dc * gv * iv * (1.0 - iv);
                    const double dzg = dc * iv * (1.0 - gv * gv);
                    if (c_prev->requires_grad()) {
                        double dcp = dc * fv;
                        if (peep)
                            dcp += dzi * w.p_i->data()[static_cast<std::size_t>(j)] +
                                   dzf * w.p_f->data()[static_cast<std::size_t>(j)];
                        c_prev->grad()[k] += dcp;
                    }
                    if (peep) {
                        if (w.p_i->requires_grad()) w.p_i->grad()[static_cast<std::size_t>(j)] += dzi * cp;
                        if (w.p_f->requires_grad()) w.p_f->grad()[static_cast<std::size_t>(j)] += dzf * cp;
                    }
                    double* dzr = dz.data() + static_cast<std::size_t>(i) * 4 * h;
                    dzr[j] = dzi;
                    dzr[h + j] = dzf;
                    dzr[2 * h + j] = dzg;
                    dzr[3 * h + j] = dzo;
                }
            }
            for (int i = 0; i < n; ++i) {
                const double* dzr = dz.data() + static_cast<std::size_t>(i) * 4 * h;
                if (w.bias->requires_grad()) {
                    auto& gb = w.bias->grad();
                    for (int j = 0; j < 4 * h; ++j) gb[static_cast<std::size_t>(j)] += dzr[j];
                }
                if (x->requires_grad()) {
                    auto& gx = x->grad();
                    for (int c = 0; c < d; ++c) {
                        const double* wr = w.w_x->data().data() + static_cast<std::size_t>(c) * 4 * h;
                        double s = 0.0;
                        for (int j = 0; j < 4 * h; ++j) s += dzr[j] * wr[j];
                        gx[static_cast<std::size_t>(i) * d + c] += s;
                    }
                }
                if (w.w_x->requires_grad()) {
                    auto& gw = w.w_x->grad();
                    for (int c = 0; c < d; ++c) {
                        const double xv = x->at(i, c);
                        if (xv == 0.0) continue;
                        double* gwr = gw.data() + static_cast<std::size_t>(c) * 4 * h;
                        for (int j = 0; j < 4 * h; ++j) gwr[j] += xv * dzr[j];
                    }
                }
                if (h_prev->requires_grad()) {
                    auto& gh = h_prev->grad();
                    for (int c = 0; c < h; ++c) {
                        const double* wr = w.w_h->data().data() + static_cast<std::size_t>(c) * 4 * h;
                        double s = 0.0;
                        for (int j = 0; j < 4 * h; ++j) s += dzr[j] * wr[j];
                        gh[static_cast<std::size_t>(i) * h + c] += s;
                    }
                }
                if (w.w_h->requires_grad()) {
                    auto& gw = w.w_h->grad();
                    for (int c = 0; c < h; ++c) {
                        const double hv = h_prev->at(i, c);
                        if (hv == 0.0) continue;
                        double* gwr = gw.data() + static_cast<std::size_t>(c) * 4 * h;
                        for (int j = 0; j < 4 * h; ++j) gwr[j] += hv * dzr[j];
                    }
                }
            }
        });
    }
    return {h_out, c_out};
}

}  // namespace deepindex::ops
