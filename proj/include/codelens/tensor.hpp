#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "codelens/error.hpp"

namespace codelens::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorImpl>> parents;
    std::function<void(TensorImpl&)> backward_fn;

    bool needs_graph() const { return requires_grad || !parents.empty(); }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

// Value-semantics handle over a shared node in the autograd graph.
class Tensor {
public:
    Tensor() : impl_(std::make_shared<TensorImpl>()) {}

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        Tensor t;
        t.impl_->shape = std::move(shape);
        t.impl_->data.assign(shape_numel(t.impl_->shape), 0.0);
        t.impl_->requires_grad = requires_grad;
        return t;
    }

    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false) {
        if (shape_numel(shape) != data.size())
            throw ShapeError("from_data: " + shape_str(shape) + " does not hold " +
                             std::to_string(data.size()) + " values");
        Tensor t;
        t.impl_->shape = std::move(shape);
        t.impl_->data = std::move(data);
        t.impl_->requires_grad = requires_grad;
        return t;
    }

    static Tensor scalar(double v, bool requires_grad = false) {
        return from_data({1}, {v}, requires_grad);
    }

    const Shape& shape() const { return impl_->shape; }
    std::size_t numel() const { return impl_->data.size(); }
    std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }

    std::vector<double>& data() { return impl_->data; }
    const std::vector<double>& data() const { return impl_->data; }
    std::vector<double>& grad() { return impl_->grad; }
    const std::vector<double>& grad() const { return impl_->grad; }

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool b) { impl_->requires_grad = b; }

    double value() const {
        if (numel() != 1) throw ShapeError("value() on non-scalar tensor " + shape_str(shape()));
        return impl_->data[0];
    }

    std::shared_ptr<TensorImpl> impl() const { return impl_; }

    // Reverse-mode accumulation from this (scalar) value.
    void backward() const {
        if (numel() != 1)
            throw ShapeError("backward() requires a scalar loss, got " + shape_str(shape()));
        if (impl_->parents.empty() && !impl_->requires_grad)
            throw MissingGraphError("backward() on a value with no recorded graph");

        std::vector<TensorImpl*> order;
        std::unordered_set<TensorImpl*> seen;
        std::function<void(TensorImpl*)> visit = [&](TensorImpl* node) {
            if (seen.count(node)) return;
            seen.insert(node);
            for (auto& p : node->parents) visit(p.get());
            order.push_back(node);
        };
        visit(impl_.get());

        for (auto* node : order) node->grad.assign(node->data.size(), 0.0);
        impl_->grad.assign(1, 1.0);
        for (auto it = order.rbegin(); it != order.rend(); ++it)
            if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }

    void zero_grad() { impl_->grad.assign(impl_->data.size(), 0.0); }

    // Detached copy sharing no graph (used for Transformer-XL memory).
    Tensor detach() const {
        Tensor t;
        t.impl_->shape = impl_->shape;
        t.impl_->data = impl_->data;
        return t;
    }

private:
    std::shared_ptr<TensorImpl> impl_;
};

// Intra-op worker count. Parallel sections always partition disjoint output
// rows with a fixed schedule, so results are bit-identical for any setting.
inline int& num_threads() {
    static int n = 1;
    return n;
}
inline void set_num_threads(int n) { num_threads() = std::max(1, n); }

namespace detail {

template <typename F>
inline void parallel_rows(std::size_t total, const F& fn) {
    int workers = num_threads();
    if (workers <= 1 || total < 2) {
        fn(std::size_t{0}, total);
        return;
    }
    std::size_t chunk = (total + static_cast<std::size_t>(workers) - 1) /
                        static_cast<std::size_t>(workers);
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
        std::size_t lo = static_cast<std::size_t>(t) * chunk;
        std::size_t hi = std::min(total, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

inline Tensor make_node(Shape shape, std::vector<std::shared_ptr<TensorImpl>> parents,
                        std::function<void(TensorImpl&)> backward_fn) {
    Tensor t = Tensor::zeros(std::move(shape));
    bool track = false;
    for (auto& p : parents)
        if (p->needs_graph()) track = true;
    if (track) {
        t.impl()->parents = std::move(parents);
        t.impl()->backward_fn = std::move(backward_fn);
    }
    return t;
}

// C (n x m) += A (n x k) * B (k x m); ikj order so the inner loop vectorizes.
// Parallel over disjoint C rows.
inline void gemm_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                     std::size_t m) {
    parallel_rows(n, [=](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double* arow = a + i * k;
            double* crow = c + i * m;
            for (std::size_t kk = 0; kk < k; ++kk) {
                double av = arow[kk];
                if (av == 0.0) continue;
                const double* brow = b + kk * m;
                for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
            }
        }
    });
}

// C (n x m) += A^T stored as (k x n) times B (k x m). Parallel over C rows:
// each worker scans all k but touches only its own rows of C.
inline void gemm_at_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                        std::size_t m) {
    parallel_rows(n, [=](std::size_t lo, std::size_t hi) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double* arow = a + kk * n;
            const double* brow = b + kk * m;
            for (std::size_t i = lo; i < hi; ++i) {
                double av = arow[i];
                if (av == 0.0) continue;
                double* crow = c + i * m;
                for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
            }
        }
    });
}

// C (n x m) += A (n x k) * B^T stored as (m x k). Parallel over C rows.
inline void gemm_bt_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
                        std::size_t m) {
    parallel_rows(n, [=](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double* arow = a + i * k;
            double* crow = c + i * m;
            for (std::size_t j = 0; j < m; ++j) {
                const double* brow = b + j * k;
                double s = 0.0;
                for (std::size_t kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
                crow[j] += s;
            }
        }
    });
}


// serial variants for use inside batch-parallel regions (no nested threading)
inline void gemm_acc_serial(const double* a, const double* b, double* c, std::size_t n,
                            std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * m;
        for (std::size_t kk = 0; kk < k; ++kk) {
            double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = b + kk * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

inline void gemm_at_acc_serial(const double* a, const double* b, double* c, std::size_t n,
                               std::size_t k, std::size_t m) {
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double* arow = a + kk * n;
        const double* brow = b + kk * m;
        for (std::size_t i = 0; i < n; ++i) {
            double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c + i * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

inline void gemm_bt_acc_serial(const double* a, const double* b, double* c, std::size_t n,
                               std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * m;
        for (std::size_t j = 0; j < m; ++j) {
            const double* brow = b + j * k;
            double s = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
            crow[j] += s;
        }
    }
}

} // namespace detail


// ---------------------------------------------------------------------------
// elementwise and reduction ops
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto out = detail::make_node(a.shape(), {a.impl(), b.impl()}, [](TensorImpl& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        pa.ensure_grad();
        pb.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            pa.grad[i] += self.grad[i];
            pb.grad[i] += self.grad[i];
        }
    });
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError("sub: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto out = detail::make_node(a.shape(), {a.impl(), b.impl()}, [](TensorImpl& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        pa.ensure_grad();
        pb.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            pa.grad[i] += self.grad[i];
            pb.grad[i] -= self.grad[i];
        }
    });
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
    return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError("mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto out = detail::make_node(a.shape(), {a.impl(), b.impl()}, [](TensorImpl& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        pa.ensure_grad();
        pb.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            pa.grad[i] += self.grad[i] * pb.data[i];
            pb.grad[i] += self.grad[i] * pa.data[i];
        }
    });
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    return out;
}

inline Tensor scale(const Tensor& a, double s) {
    auto out = detail::make_node(a.shape(), {a.impl()}, [s](TensorImpl& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * s;
    });
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] * s;
    return out;
}

inline Tensor sum(const Tensor& a) {
    auto out = detail::make_node({1}, {a.impl()}, [](TensorImpl& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < pa.grad.size(); ++i) pa.grad[i] += self.grad[0];
    });
    out.data()[0] = std::accumulate(a.data().begin(), a.data().end(), 0.0);
    return out;
}

inline Tensor mean(const Tensor& a) {
    double inv = 1.0 / static_cast<double>(a.numel());
    auto out = detail::make_node({1}, {a.impl()}, [inv](TensorImpl& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < pa.grad.size(); ++i) pa.grad[i] += self.grad[0] * inv;
    });
    out.data()[0] = std::accumulate(a.data().begin(), a.data().end(), 0.0) * inv;
    return out;
}

inline Tensor relu(const Tensor& a) {
    auto out = detail::make_node(a.shape(), {a.impl()}, [](TensorImpl& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (self.data[i] > 0.0) pa.grad[i] += self.grad[i];
    });
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = std::max(0.0, a.data()[i]);
    return out;
}

inline Tensor gelu(const Tensor& a) {
    auto out = detail::make_node(a.shape(), {a.impl()}, [](TensorImpl& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        constexpr double inv_sqrt2 = 0.7071067811865476;
        constexpr double inv_sqrt2pi = 0.3989422804014327;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            double x = pa.data[i];
            double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
            double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
            pa.grad[i] += self.grad[i] * (cdf + x * pdf);
        }
    });
    constexpr double inv_sqrt2 = 0.7071067811865476;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        double x = a.data()[i];
        out.data()[i] = 0.5 * x * (1.0 + std::erf(x * inv_sqrt2));
    }
    return out;
}

inline Tensor square(const Tensor& a) { return mul(a, a); }

inline Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel())
        throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
    auto out = detail::make_node(shape, {a.impl()}, [](TensorImpl& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    });
    out.data() = a.data();
    return out;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

// (n x k) * (k x m) -> (n x m)
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.dim(1) != b.dim(0))
        throw ShapeError("matmul: incompatible " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
    auto out = detail::make_node({n, m}, {a.impl(), b.impl()}, [n, k, m](TensorImpl& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        pa.ensure_grad();
        pb.ensure_grad();
        // dA = dC * B^T ; dB = A^T * dC
        detail::gemm_bt_acc(self.grad.data(), pb.data.data(), pa.grad.data(), n, m, k);
        detail::gemm_at_acc(pa.data.data(), self.grad.data(), pb.grad.data(), k, n, m);
    });
    detail::gemm_acc(a.data().data(), b.data().data(), out.data().data(), n, k, m);
    return out;
}

// x (B x in) * w (in x out) + bias (out)
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias,
                     const char* layer_name = "linear") {
    if (x.shape().size() != 2 || w.shape().size() != 2 || x.dim(1) != w.dim(0) ||
        bias.numel() != w.dim(1))
        throw ShapeError(std::string(layer_name) + ": incompatible shapes x=" + shape_str(x.shape()) +
                         " w=" + shape_str(w.shape()) + " b=" + shape_str(bias.shape()));
    std::size_t n = x.dim(0), k = x.dim(1), m = w.dim(1);
    auto out = detail::make_node({n, m}, {x.impl(), w.impl(), bias.impl()},
                                 [n, k, m](TensorImpl& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        auto& pb = *self.parents[2];
        px.ensure_grad();
        pw.ensure_grad();
        pb.ensure_grad();
        detail::gemm_bt_acc(self.grad.data(), pw.data.data(), px.grad.data(), n, m, k);
        detail::gemm_at_acc(px.data.data(), self.grad.data(), pw.grad.data(), k, n, m);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) pb.grad[j] += self.grad[i * m + j];
    });
    detail::gemm_acc(x.data().data(), w.data().data(), out.data().data(), n, k, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out.data()[i * m + j] += bias.data()[j];
    return out;
}

// Softmax over the last dimension.
inline Tensor softmax_lastdim(const Tensor& a) {
    std::size_t cols = a.shape().back();
    std::size_t rows = a.numel() / cols;
    auto out = detail::make_node(a.shape(), {a.impl()}, [rows, cols](TensorImpl& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.data.data() + r * cols;
            const double* dy = self.grad.data() + r * cols;
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) dot += y[j] * dy[j];
            double* dx = pa.grad.data() + r * cols;
            for (std::size_t j = 0; j < cols; ++j) dx[j] += y[j] * (dy[j] - dot);
        }
    });
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = a.data().data() + r * cols;
        double* y = out.data().data() + r * cols;
        double mx = x[0];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < cols; ++j) z += (y[j] = std::exp(x[j] - mx));
        for (std::size_t j = 0; j < cols; ++j) y[j] /= z;
    }
    return out;
}

// ---------------------------------------------------------------------------
// normalization layers
// ---------------------------------------------------------------------------

// LayerNorm over the last dimension with scale g and offset b.
inline Tensor layer_norm(const Tensor& x, const Tensor& g, const Tensor& b, double eps = 1e-5,
                         const char* layer_name = "layer_norm") {
    std::size_t cols = x.shape().back();
    if (g.numel() != cols || b.numel() != cols)
        throw ShapeError(std::string(layer_name) + ": scale/offset must have " +
                         std::to_string(cols) + " entries");
    std::size_t rows = x.numel() / cols;
    auto out = detail::make_node(x.shape(), {x.impl(), g.impl(), b.impl()},
                                 [rows, cols, eps](TensorImpl& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        px.ensure_grad();
        pg.ensure_grad();
        pb.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* x = px.data.data() + r * cols;
            const double* dy = self.grad.data() + r * cols;
            double mu = 0.0, var = 0.0;
            for (std::size_t j = 0; j < cols; ++j) mu += x[j];
            mu /= static_cast<double>(cols);
            for (std::size_t j = 0; j < cols; ++j) var += (x[j] - mu) * (x[j] - mu);
            var /= static_cast<double>(cols);
            double inv = 1.0 / std::sqrt(var + eps);
            // accumulate per-feature grads and the two reduction terms
            double sum_dyg = 0.0, sum_dyg_xhat = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                double xhat = (x[j] - mu) * inv;
                double dyg = dy[j] * pg.data[j];
                sum_dyg += dyg;
                sum_dyg_xhat += dyg * xhat;
                pg.grad[j] += dy[j] * xhat;
                pb.grad[j] += dy[j];
            }
            double* dx = px.grad.data() + r * cols;
            double n = static_cast<double>(cols);
            for (std::size_t j = 0; j < cols; ++j) {
                double xhat = (x[j] - mu) * inv;
                double dyg = dy[j] * pg.data[j];
                dx[j] += inv * (dyg - sum_dyg / n - xhat * sum_dyg_xhat / n);
            }
        }
    });
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.data().data() + r * cols;
        double* y = out.data().data() + r * cols;
        double mu = 0.0, var = 0.0;
        for (std::size_t j = 0; j < cols; ++j) mu += xr[j];
        mu /= static_cast<double>(cols);
        for (std::size_t j = 0; j < cols; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<double>(cols);
        double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < cols; ++j)
            y[j] = (xr[j] - mu) * inv * g.data()[j] + b.data()[j];
    }
    return out;
}

// Running statistics owned by the model, updated only in training mode.
struct BatchNormState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    explicit BatchNormState(std::size_t channels = 0)
        : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

// BatchNorm over (B, C, H, W): batch statistics in training, running
// statistics in evaluation.
inline Tensor batch_norm2d(const Tensor& x, const Tensor& g, const Tensor& b, BatchNormState& state,
                           bool training, const char* layer_name = "batch_norm") {
    if (x.shape().size() != 4)
        throw ShapeError(std::string(layer_name) + ": expected (B,C,H,W), got " + shape_str(x.shape()));
    std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (g.numel() != C || b.numel() != C || state.running_mean.size() != C)
        throw ShapeError(std::string(layer_name) + ": channel mismatch");
    std::size_t plane = H * W;
    std::size_t per_c = B * plane;

    std::vector<double> mu(C), var(C);
    if (training) {
        for (std::size_t c = 0; c < C; ++c) {
            double m = 0.0;
            for (std::size_t n = 0; n < B; ++n) {
                const double* p = x.data().data() + (n * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) m += p[i];
            }
            m /= static_cast<double>(per_c);
            double v = 0.0;
            for (std::size_t n = 0; n < B; ++n) {
                const double* p = x.data().data() + (n * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) v += (p[i] - m) * (p[i] - m);
            }
            v /= static_cast<double>(per_c);
            mu[c] = m;
            var[c] = v;
            state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * m;
            state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] + state.momentum * v;
        }
    } else {
        mu = state.running_mean;
        var = state.running_var;
    }

    double eps = state.eps;
    auto out = detail::make_node(x.shape(), {x.impl(), g.impl(), b.impl()},
                                 [B, C, plane, per_c, mu, var, eps, training](TensorImpl& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        px.ensure_grad();
        pg.ensure_grad();
        pb.ensure_grad();
        for (std::size_t c = 0; c < C; ++c) {
            double inv = 1.0 / std::sqrt(var[c] + eps);
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t n = 0; n < B; ++n) {
                const double* xp = px.data.data() + (n * C + c) * plane;
                const double* dyp = self.grad.data() + (n * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    double xhat = (xp[i] - mu[c]) * inv;
                    sum_dy += dyp[i];
                    sum_dy_xhat += dyp[i] * xhat;
                }
            }
            pg.grad[c] += sum_dy_xhat;
            pb.grad[c] += sum_dy;
            double gc = pg.data[c];
            double n_inv = 1.0 / static_cast<double>(per_c);
            for (std::size_t n = 0; n < B; ++n) {
                const double* xp = px.data.data() + (n * C + c) * plane;
                const double* dyp = self.grad.data() + (n * C + c) * plane;
                double* dxp = px.grad.data() + (n * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    if (training) {
                        double xhat = (xp[i] - mu[c]) * inv;
                        dxp[i] += gc * inv * (dyp[i] - sum_dy * n_inv - xhat * sum_dy_xhat * n_inv);
                    } else {
                        dxp[i] += gc * inv * dyp[i]; // running stats are constants
                    }
                }
            }
        }
    });
    for (std::size_t c = 0; c < C; ++c) {
        double inv = 1.0 / std::sqrt(var[c] + eps);
        double gc = g.data()[c], bc = b.data()[c];
        for (std::size_t n = 0; n < B; ++n) {
            const double* xp = x.data().data() + (n * C + c) * plane;
            double* yp = out.data().data() + (n * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) yp[i] = (xp[i] - mu[c]) * inv * gc + bc;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// convolution
// ---------------------------------------------------------------------------

// x (B, Cin, H, W), w (Cout, Cin, K, K), no bias (a BatchNorm follows in every
// use here). Zero padding `pad`, stride `stride`.
inline Tensor conv2d(const Tensor& x, const Tensor& w, std::size_t stride = 1, std::size_t pad = 1,
                     const char* layer_name = "conv2d") {
    if (x.shape().size() != 4 || w.shape().size() != 4 || x.dim(1) != w.dim(1))
        throw ShapeError(std::string(layer_name) + ": incompatible x=" + shape_str(x.shape()) +
                         " w=" + shape_str(w.shape()));
    std::size_t B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    std::size_t Cout = w.dim(0), K = w.dim(2);
    if (w.dim(3) != K) throw ShapeError(std::string(layer_name) + ": non-square kernel");
    if (H + 2 * pad < K || W + 2 * pad < K)
        throw ShapeError(std::string(layer_name) + ": kernel larger than padded input");
    std::size_t Ho = (H + 2 * pad - K) / stride + 1;
    std::size_t Wo = (W + 2 * pad - K) / stride + 1;
    std::size_t cols_k = Cin * K * K;
    std::size_t cols_n = Ho * Wo;

    auto im2col = [=](const double* xp, double* col) {
        // col is (Cin*K*K, Ho*Wo)
        std::size_t idx = 0;
        for (std::size_t c = 0; c < Cin; ++c) {
            for (std::size_t ky = 0; ky < K; ++ky) {
                for (std::size_t kx = 0; kx < K; ++kx, ++idx) {
                    double* dst = col + idx * cols_n;
                    for (std::size_t oy = 0; oy < Ho; ++oy) {
                        std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                            static_cast<std::ptrdiff_t>(pad);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) {
                            for (std::size_t ox = 0; ox < Wo; ++ox) dst[oy * Wo + ox] = 0.0;
                            continue;
                        }
                        for (std::size_t ox = 0; ox < Wo; ++ox) {
                            std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                                static_cast<std::ptrdiff_t>(pad);
                            dst[oy * Wo + ox] =
                                (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W))
                                    ? 0.0
                                    : xp[(c * H + static_cast<std::size_t>(iy)) * W +
                                         static_cast<std::size_t>(ix)];
                        }
                    }
                }
            }
        }
    };

    auto out = detail::make_node({B, Cout, Ho, Wo}, {x.impl(), w.impl()},
                                 [=](TensorImpl& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        px.ensure_grad();
        pw.ensure_grad();
        // batch-parallel: dX rows are disjoint per sample; dW accumulates into
        // per-worker partials reduced in fixed order afterwards
        int workers = num_threads();
        std::size_t chunk = (B + static_cast<std::size_t>(workers) - 1) /
                            static_cast<std::size_t>(workers);
        std::vector<std::vector<double>> dw_parts;
        std::size_t n_chunks = (B + chunk - 1) / chunk;
        dw_parts.resize(n_chunks, std::vector<double>(pw.data.size(), 0.0));
        detail::parallel_rows(B, [&](std::size_t lo, std::size_t hi) {
            std::vector<double>& dw = dw_parts[lo / chunk];
            std::vector<double> col(cols_k * cols_n);
            std::vector<double> dcol(cols_k * cols_n);
            for (std::size_t n = lo; n < hi; ++n) {
                const double* xp = px.data.data() + n * Cin * H * W;
                const double* dyp = self.grad.data() + n * Cout * cols_n;
                im2col(xp, col.data());
                // dW (Cout, cols_k) += dY (Cout, cols_n) * col^T
                detail::gemm_bt_acc_serial(dyp, col.data(), dw.data(), Cout, cols_n, cols_k);
                // dcol (cols_k, cols_n) = W^T (cols_k, Cout) * dY
                std::fill(dcol.begin(), dcol.end(), 0.0);
                detail::gemm_at_acc_serial(pw.data.data(), dyp, dcol.data(), cols_k, Cout, cols_n);
                // col2im scatter
                double* dxp = px.grad.data() + n * Cin * H * W;
                std::size_t idx = 0;
                for (std::size_t c = 0; c < Cin; ++c) {
                    for (std::size_t ky = 0; ky < K; ++ky) {
                        for (std::size_t kx = 0; kx < K; ++kx, ++idx) {
                            const double* src = dcol.data() + idx * cols_n;
                            for (std::size_t oy = 0; oy < Ho; ++oy) {
                                std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                                    static_cast<std::ptrdiff_t>(pad);
                                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                                for (std::size_t ox = 0; ox < Wo; ++ox) {
                                    std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                                        static_cast<std::ptrdiff_t>(pad);
                                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                                    dxp[(c * H + static_cast<std::size_t>(iy)) * W +
                                        static_cast<std::size_t>(ix)] += src[oy * Wo + ox];
                                }
                            }
                        }
                    }
                }
            }
        });
        for (const auto& dw : dw_parts)
            for (std::size_t i = 0; i < dw.size(); ++i) pw.grad[i] += dw[i];
    });

    detail::parallel_rows(B, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> col(cols_k * cols_n);
        for (std::size_t n = lo; n < hi; ++n) {
            im2col(x.data().data() + n * Cin * H * W, col.data());
            detail::gemm_acc_serial(w.data().data(), col.data(),
                                    out.data().data() + n * Cout * cols_n, Cout, cols_k, cols_n);
        }
    });
    return out;
}

// Global average pooling (B, C, H, W) -> (B, C)
inline Tensor gap2d(const Tensor& x) {
    if (x.shape().size() != 4) throw ShapeError("gap2d: expected (B,C,H,W), got " + shape_str(x.shape()));
    std::size_t B = x.dim(0), C = x.dim(1), plane = x.dim(2) * x.dim(3);
    double inv = 1.0 / static_cast<double>(plane);
    auto out = detail::make_node({B, C}, {x.impl()}, [B, C, plane, inv](TensorImpl& self) {
        auto& px = *self.parents[0];
        px.ensure_grad();
        for (std::size_t n = 0; n < B; ++n)
            for (std::size_t c = 0; c < C; ++c) {
                double d = self.grad[n * C + c] * inv;
                double* dst = px.grad.data() + (n * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) dst[i] += d;
            }
    });
    for (std::size_t n = 0; n < B; ++n)
        for (std::size_t c = 0; c < C; ++c) {
            const double* p = x.data().data() + (n * C + c) * plane;
            double s = 0.0;
            for (std::size_t i = 0; i < plane; ++i) s += p[i];
            out.data()[n * C + c] = s * inv;
        }
    return out;
}

// Mean over the token axis: (B, N, D) -> (B, D)
inline Tensor gap_tokens(const Tensor& x) {
    if (x.shape().size() != 3)
        throw ShapeError("gap_tokens: expected (B,N,D), got " + shape_str(x.shape()));
    std::size_t B = x.dim(0), N = x.dim(1), D = x.dim(2);
    double inv = 1.0 / static_cast<double>(N);
    auto out = detail::make_node({B, D}, {x.impl()}, [B, N, D, inv](TensorImpl& self) {
        auto& px = *self.parents[0];
        px.ensure_grad();
        for (std::size_t n = 0; n < B; ++n)
            for (std::size_t t = 0; t < N; ++t)
                for (std::size_t d = 0; d < D; ++d)
                    px.grad[(n * N + t) * D + d] += self.grad[n * D + d] * inv;
    });
    for (std::size_t n = 0; n < B; ++n)
        for (std::size_t d = 0; d < D; ++d) {
            double s = 0.0;
            for (std::size_t t = 0; t < N; ++t) s += x.data()[(n * N + t) * D + d];
            out.data()[n * D + d] = s * inv;
        }
    return out;
}

// ---------------------------------------------------------------------------
// attention
// ---------------------------------------------------------------------------

// Multi-head self-attention with distinct query and key/value inputs so that
// segment-recurrent models can attend over [memory; segment]. For plain
// self-attention pass the same tensor twice. Shapes: q_in (B, Nq, D),
// kv_in (B, Nk, D); weights are (D, D) with (D) biases.
inline Tensor multi_head_attention(const Tensor& q_in, const Tensor& kv_in, const Tensor& wq,
                                   const Tensor& bq, const Tensor& wk, const Tensor& bk,
                                   const Tensor& wv, const Tensor& bv, const Tensor& wo,
                                   const Tensor& bo, std::size_t num_heads,
                                   const char* layer_name = "msa") {
    if (q_in.shape().size() != 3 || kv_in.shape().size() != 3 || q_in.dim(2) != kv_in.dim(2))
        throw ShapeError(std::string(layer_name) + ": expected (B,N,D) inputs, got " +
                         shape_str(q_in.shape()) + " and " + shape_str(kv_in.shape()));
    std::size_t B = q_in.dim(0), Nq = q_in.dim(1), D = q_in.dim(2), Nk = kv_in.dim(1);
    if (kv_in.dim(0) != B) throw ShapeError(std::string(layer_name) + ": batch mismatch");
    if (D % num_heads != 0)
        throw ShapeError(std::string(layer_name) + ": embed dim " + std::to_string(D) +
                         " not divisible by " + std::to_string(num_heads) + " heads");
    for (const Tensor* w : {&wq, &wk, &wv, &wo})
        if (w->shape() != Shape{D, D})
            throw ShapeError(std::string(layer_name) + ": projection weight must be (D,D)");
    std::size_t dh = D / num_heads;
    double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // flatten batch+token dims for the projections
    auto q2 = reshape(q_in, {B * Nq, D});
    auto k2 = reshape(kv_in, {B * Nk, D});
    auto q = linear(q2, wq, bq, "msa.q");
    auto k = linear(k2, wk, bk, "msa.k");
    auto v = linear(k2, wv, bv, "msa.v");

    // fused scaled-dot-product over heads
    std::size_t H = num_heads;
    auto ctx = detail::make_node({B * Nq, D}, {q.impl(), k.impl(), v.impl()},
                                 [B, Nq, Nk, D, H, dh, scale](TensorImpl& self) {
        auto& pq = *self.parents[0];
        auto& pk = *self.parents[1];
        auto& pv = *self.parents[2];
        pq.ensure_grad();
        pk.ensure_grad();
        pv.ensure_grad();
        detail::parallel_rows(B, [&](std::size_t blo, std::size_t bhi) {
        std::vector<double> att(Nq * Nk);
        std::vector<double> datt(Nq * Nk);
        for (std::size_t n = blo; n < bhi; ++n) {
            for (std::size_t h = 0; h < H; ++h) {
                // recompute attention weights (cheaper than caching per node)
                for (std::size_t i = 0; i < Nq; ++i) {
                    const double* qi = pq.data.data() + (n * Nq + i) * D + h * dh;
                    double mx = -1e300;
                    for (std::size_t j = 0; j < Nk; ++j) {
                        const double* kj = pk.data.data() + (n * Nk + j) * D + h * dh;
                        double s = 0.0;
                        for (std::size_t d = 0; d < dh; ++d) s += qi[d] * kj[d];
                        att[i * Nk + j] = s * scale;
                        mx = std::max(mx, att[i * Nk + j]);
                    }
                    double z = 0.0;
                    for (std::size_t j = 0; j < Nk; ++j)
                        z += (att[i * Nk + j] = std::exp(att[i * Nk + j] - mx));
                    for (std::size_t j = 0; j < Nk; ++j) att[i * Nk + j] /= z;
                }
                // dV and dAtt
                for (std::size_t i = 0; i < Nq; ++i) {
                    const double* dctx = self.grad.data() + (n * Nq + i) * D + h * dh;
                    for (std::size_t j = 0; j < Nk; ++j) {
                        const double* vj = pv.data.data() + (n * Nk + j) * D + h * dh;
                        double* dvj = pv.grad.data() + (n * Nk + j) * D + h * dh;
                        double a = att[i * Nk + j];
                        double s = 0.0;
                        for (std::size_t d = 0; d < dh; ++d) {
                            dvj[d] += a * dctx[d];
                            s += vj[d] * dctx[d];
                        }
                        datt[i * Nk + j] = s;
                    }
                }
                // softmax backward then dQ, dK
                for (std::size_t i = 0; i < Nq; ++i) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < Nk; ++j) dot += att[i * Nk + j] * datt[i * Nk + j];
                    const double* qi = pq.data.data() + (n * Nq + i) * D + h * dh;
                    double* dqi = pq.grad.data() + (n * Nq + i) * D + h * dh;
                    for (std::size_t j = 0; j < Nk; ++j) {
                        double dscore = att[i * Nk + j] * (datt[i * Nk + j] - dot) * scale;
                        const double* kj = pk.data.data() + (n * Nk + j) * D + h * dh;
                        double* dkj = pk.grad.data() + (n * Nk + j) * D + h * dh;
                        for (std::size_t d = 0; d < dh; ++d) {
                            dqi[d] += dscore * kj[d];
                            dkj[d] += dscore * qi[d];
                        }
                    }
                }
            }
        }
        });
    });
    {
        // forward pass of the fused block
        detail::parallel_rows(B, [&](std::size_t blo, std::size_t bhi) {
        std::vector<double> att(Nq * Nk);
        for (std::size_t n = blo; n < bhi; ++n) {
            for (std::size_t h = 0; h < H; ++h) {
                for (std::size_t i = 0; i < Nq; ++i) {
                    const double* qi = q.data().data() + (n * Nq + i) * D + h * dh;
                    double mx = -1e300;
                    for (std::size_t j = 0; j < Nk; ++j) {
                        const double* kj = k.data().data() + (n * Nk + j) * D + h * dh;
                        double s = 0.0;
                        for (std::size_t d = 0; d < dh; ++d) s += qi[d] * kj[d];
                        att[i * Nk + j] = s * scale;
                        mx = std::max(mx, att[i * Nk + j]);
                    }
                    double z = 0.0;
                    for (std::size_t j = 0; j < Nk; ++j)
                        z += (att[i * Nk + j] = std::exp(att[i * Nk + j] - mx));
                    double* ctx_i = ctx.data().data() + (n * Nq + i) * D + h * dh;
                    for (std::size_t j = 0; j < Nk; ++j) {
                        double a = att[i * Nk + j] / z;
                        const double* vj = v.data().data() + (n * Nk + j) * D + h * dh;
                        for (std::size_t d = 0; d < dh; ++d) ctx_i[d] += a * vj[d];
                    }
                }
            }
        }
        });
    }
    auto projected = linear(ctx, wo, bo, "msa.out");
    return reshape(projected, {B, Nq, D});
}

// ---------------------------------------------------------------------------
// loss
// ---------------------------------------------------------------------------

// Mean binary cross-entropy computed from 2-class logits via log-sum-exp;
// equals -(1/N) sum [y log(p1) + (1-y) log(1-p1)] with p1 = softmax(z)[1].
inline Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.shape().size() != 2 || logits.dim(1) != 2)
        throw ShapeError("cross_entropy: expected (B,2) logits, got " + shape_str(logits.shape()));
    std::size_t B = logits.dim(0);
    if (labels.size() != B) throw ShapeError("cross_entropy: labels size mismatch");
    for (int y : labels)
        if (y != 0 && y != 1) throw ShapeError("cross_entropy: labels must be 0 or 1");

    auto labels_copy = labels;
    auto out = detail::make_node({1}, {logits.impl()}, [B, labels_copy](TensorImpl& self) {
        auto& pl = *self.parents[0];
        pl.ensure_grad();
        double d = self.grad[0] / static_cast<double>(B);
        for (std::size_t i = 0; i < B; ++i) {
            double z0 = pl.data[i * 2], z1 = pl.data[i * 2 + 1];
            double mx = std::max(z0, z1);
            double e0 = std::exp(z0 - mx), e1 = std::exp(z1 - mx);
            double p0 = e0 / (e0 + e1), p1 = e1 / (e0 + e1);
            int y = labels_copy[i];
            pl.grad[i * 2] += d * (p0 - (y == 0 ? 1.0 : 0.0));
            pl.grad[i * 2 + 1] += d * (p1 - (y == 1 ? 1.0 : 0.0));
        }
    });
    double total = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        double z0 = logits.data()[i * 2], z1 = logits.data()[i * 2 + 1];
        double mx = std::max(z0, z1);
        double lse = mx + std::log(std::exp(z0 - mx) + std::exp(z1 - mx));
        total += lse - (labels[i] == 1 ? z1 : z0);
    }
    out.data()[0] = total / static_cast<double>(B);
    return out;
}

// Probability of class 1 from 2-class logits (reporting path; clamped).
inline double prob_class1(double z0, double z1) {
    double p = 1.0 / (1.0 + std::exp(z0 - z1));
    return std::clamp(p, 1e-7, 1.0 - 1e-7);
}

} // namespace codelens::nn
