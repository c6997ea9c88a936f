#include "gcd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "gcd/errors.hpp"
#include "gcd/kernels.hpp"

namespace gcd {

std::int64_t numel(const Shape& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor shape has non-positive extent");
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

TensorPtr Tensor::make(Shape shape, std::vector<double> data, bool requires_grad) {
    auto t = std::make_shared<Tensor>();
    const auto n = numel(shape);
    if (static_cast<std::int64_t>(data.size()) != n)
        throw DimensionError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    t->shape = std::move(shape);
    t->data = std::move(data);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr Tensor::zeros(Shape shape, bool requires_grad) {
    auto n = numel(shape);
    return make(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0), requires_grad);
}

TensorPtr Tensor::full(Shape shape, double value, bool requires_grad) {
    auto n = numel(shape);
    return make(std::move(shape), std::vector<double>(static_cast<size_t>(n), value), requires_grad);
}

TensorPtr Tensor::scalar(double value, bool requires_grad) {
    return make({1}, {value}, requires_grad);
}

double Tensor::item() const {
    if (!is_scalar()) throw ContractError("item() requires a scalar tensor, got " + shape_str(shape));
    return data[0];
}

void Tensor::zero_grad() {
    std::fill(grad.begin(), grad.end(), 0.0);
}

void Tensor::accumulate_grad(std::span<const double> g) {
    if (static_cast<std::int64_t>(g.size()) != size())
        throw DimensionError("gradient size mismatch");
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    for (size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

namespace {

TensorPtr make_op(Shape shape, std::vector<double> data, const char* op,
                  std::vector<TensorPtr> parents,
                  std::function<void(const Tensor&)> backward_fn) {
    bool req = false;
    for (const auto& p : parents) req = req || p->requires_grad;
    auto out = Tensor::make(std::move(shape), std::move(data), req);
    out->op = op;
    if (req) {
        out->parents = std::move(parents);
        out->backward_fn = std::move(backward_fn);
    }
    return out;
}

void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->shape != b->shape)
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a->shape) +
                             " vs " + shape_str(b->shape));
}

} // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "add");
    std::vector<double> d(a->data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = a->data[i] + b->data[i];
    return make_op(a->shape, std::move(d), "add", {a, b}, [a, b](const Tensor& out) {
        if (a->requires_grad) a->accumulate_grad(out.grad);
        if (b->requires_grad) b->accumulate_grad(out.grad);
    });
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> d(a->data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = a->data[i] - b->data[i];
    return make_op(a->shape, std::move(d), "sub", {a, b}, [a, b](const Tensor& out) {
        if (a->requires_grad) a->accumulate_grad(out.grad);
        if (b->requires_grad) {
            std::vector<double> g(out.grad.size());
            for (size_t i = 0; i < g.size(); ++i) g[i] = -out.grad[i];
            b->accumulate_grad(g);
        }
    });
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> d(a->data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = a->data[i] * b->data[i];
    return make_op(a->shape, std::move(d), "mul", {a, b}, [a, b](const Tensor& out) {
        if (a->requires_grad) {
            std::vector<double> g(out.grad.size());
            for (size_t i = 0; i < g.size(); ++i) g[i] = b->data[i] * out.grad[i];
            a->accumulate_grad(g);
        }
        if (b->requires_grad) {
            std::vector<double> g(out.grad.size());
            for (size_t i = 0; i < g.size(); ++i) g[i] = a->data[i] * out.grad[i];
            b->accumulate_grad(g);
        }
    });
}

TensorPtr affine(const TensorPtr& t, double scale, double shift) {
    std::vector<double> d(t->data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = scale * t->data[i] + shift;
    return make_op(t->shape, std::move(d), "affine", {t}, [t, scale](const Tensor& out) {
        if (!t->requires_grad) return;
        std::vector<double> g(out.grad.size());
        for (size_t i = 0; i < g.size(); ++i) g[i] = scale * out.grad[i];
        t->accumulate_grad(g);
    });
}

TensorPtr relu(const TensorPtr& t) {
    std::vector<double> d(t->data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = t->data[i] > 0.0 ? t->data[i] : 0.0;
    return make_op(t->shape, std::move(d), "relu", {t}, [t](const Tensor& out) {
        if (!t->requires_grad) return;
        std::vector<double> g(out.grad.size());
        for (size_t i = 0; i < g.size(); ++i) g[i] = t->data[i] > 0.0 ? out.grad[i] : 0.0;
        t->accumulate_grad(g);
    });
}

TensorPtr tanh_op(const TensorPtr& t) {
    std::vector<double> d(t->data.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = std::tanh(t->data[i]);
    // capture the forward values; 1 - y^2 is the local derivative
    std::vector<double> y = d;
    return make_op(t->shape, std::move(d), "tanh", {t}, [t, y = std::move(y)](const Tensor& out) {
        if (!t->requires_grad) return;
        std::vector<double> g(out.grad.size());
        for (size_t i = 0; i < g.size(); ++i) g[i] = (1.0 - y[i] * y[i]) * out.grad[i];
        t->accumulate_grad(g);
    });
}

TensorPtr reshape(const TensorPtr& t, Shape new_shape) {
    if (numel(new_shape) != t->size())
        throw DimensionError("reshape: " + shape_str(t->shape) + " -> " + shape_str(new_shape) +
                             " changes element count");
    return make_op(std::move(new_shape), t->data, "reshape", {t}, [t](const Tensor& out) {
        if (t->requires_grad) t->accumulate_grad(out.grad);
    });
}

TensorPtr select(const TensorPtr& t, std::int64_t flat_index) {
    if (flat_index < 0 || flat_index >= t->size())
        throw IndexError("select: index " + std::to_string(flat_index) + " out of range for " +
                         shape_str(t->shape));
    return make_op({1}, {t->data[static_cast<size_t>(flat_index)]}, "select", {t},
                   [t, flat_index](const Tensor& out) {
                       if (!t->requires_grad) return;
                       std::vector<double> g(t->data.size(), 0.0);
                       g[static_cast<size_t>(flat_index)] = out.grad[0];
                       t->accumulate_grad(g);
                   });
}

TensorPtr sum(const TensorPtr& t) {
    double s = 0.0;
    for (double v : t->data) s += v;
    return make_op({1}, {s}, "sum", {t}, [t](const Tensor& out) {
        if (!t->requires_grad) return;
        std::vector<double> g(t->data.size(), out.grad[0]);
        t->accumulate_grad(g);
    });
}

TensorPtr sum_squares(const TensorPtr& t) {
    double s = 0.0;
    for (double v : t->data) s += v * v;
    return make_op({1}, {s}, "sum_squares", {t}, [t](const Tensor& out) {
        if (!t->requires_grad) return;
        std::vector<double> g(t->data.size());
        for (size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * t->data[i] * out.grad[0];
        t->accumulate_grad(g);
    });
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape.size() != 2 || b->shape.size() != 2)
        throw DimensionError("matmul expects 2-d operands, got " + shape_str(a->shape) + " and " +
                             shape_str(b->shape));
    const int m = a->shape[0], k = a->shape[1];
    const int k2 = b->shape[0], n = b->shape[1];
    if (k != k2)
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a->shape) + " vs " +
                             shape_str(b->shape));
    std::vector<double> d(static_cast<size_t>(m) * n);
    kernels::matmul(a->data.data(), b->data.data(), d.data(), m, k, n);
    return make_op({m, n}, std::move(d), "matmul", {a, b}, [a, b, m, k, n](const Tensor& out) {
        if (a->requires_grad) {
            std::vector<double> ga(a->data.size());
            kernels::matmul_nt(out.grad.data(), b->data.data(), ga.data(), m, n, k);
            a->accumulate_grad(ga);
        }
        if (b->requires_grad) {
            std::vector<double> gb(b->data.size());
            kernels::matmul_tn(a->data.data(), out.grad.data(), gb.data(), k, m, n);
            b->accumulate_grad(gb);
        }
    });
}

TensorPtr conv2d(const TensorPtr& input, const TensorPtr& kernels_t, int stride, int padding) {
    if (input->shape.size() != 3)
        throw DimensionError("conv2d: input must be C×H×W, got " + shape_str(input->shape));
    if (kernels_t->shape.size() != 4)
        throw DimensionError("conv2d: kernels must be F×C×kH×kW, got " + shape_str(kernels_t->shape));
    if (input->shape[0] != kernels_t->shape[1])
        throw DimensionError("conv2d: channel mismatch, input " + shape_str(input->shape) +
                             " kernels " + shape_str(kernels_t->shape));
    const auto d = kernels::conv_dims(input->shape[0], input->shape[1], input->shape[2],
                                      kernels_t->shape[0], kernels_t->shape[2], kernels_t->shape[3],
                                      stride, padding);
    std::vector<double> y(static_cast<size_t>(d.F) * d.Hout * d.Wout);
    kernels::conv2d_forward(input->data.data(), kernels_t->data.data(), y.data(), d);
    return make_op({d.F, d.Hout, d.Wout}, std::move(y), "conv2d", {input, kernels_t},
                   [input, kernels_t, d](const Tensor& out) {
                       if (input->requires_grad) {
                           std::vector<double> gx(input->data.size());
                           kernels::conv2d_backward_input(out.grad.data(), kernels_t->data.data(),
                                                          gx.data(), d);
                           input->accumulate_grad(gx);
                       }
                       if (kernels_t->requires_grad) {
                           std::vector<double> gk(kernels_t->data.size());
                           kernels::conv2d_backward_kernels(out.grad.data(), input->data.data(),
                                                            gk.data(), d);
                           kernels_t->accumulate_grad(gk);
                       }
                   });
}

TensorPtr bias_add_channel(const TensorPtr& t, const TensorPtr& bias) {
    if (t->shape.size() != 3 || bias->shape.size() != 1 || bias->shape[0] != t->shape[0])
        throw DimensionError("bias_add_channel: got " + shape_str(t->shape) + " and " +
                             shape_str(bias->shape));
    const int F = t->shape[0];
    const long plane = static_cast<long>(t->shape[1]) * t->shape[2];
    std::vector<double> d(t->data.size());
    for (int f = 0; f < F; ++f)
        for (long i = 0; i < plane; ++i) d[f * plane + i] = t->data[f * plane + i] + bias->data[f];
    return make_op(t->shape, std::move(d), "bias_add_channel", {t, bias},
                   [t, bias, F, plane](const Tensor& out) {
                       if (t->requires_grad) t->accumulate_grad(out.grad);
                       if (bias->requires_grad) {
                           std::vector<double> gb(static_cast<size_t>(F), 0.0);
                           for (int f = 0; f < F; ++f)
                               for (long i = 0; i < plane; ++i) gb[f] += out.grad[f * plane + i];
                           bias->accumulate_grad(gb);
                       }
                   });
}

TensorPtr maxpool2x2(const TensorPtr& t) {
    if (t->shape.size() != 3)
        throw DimensionError("maxpool2x2: input must be C×H×W, got " + shape_str(t->shape));
    const int C = t->shape[0], H = t->shape[1], W = t->shape[2];
    if (H % 2 != 0 || W % 2 != 0)
        throw ContractError("maxpool2x2: spatial dims must be even, got " + shape_str(t->shape));
    std::vector<double> y(static_cast<size_t>(C) * (H / 2) * (W / 2));
    auto argmax = std::make_shared<std::vector<int>>(y.size());
    kernels::maxpool2x2_forward(t->data.data(), y.data(), argmax->data(), C, H, W);
    return make_op({C, H / 2, W / 2}, std::move(y), "maxpool2x2", {t},
                   [t, argmax, C, H, W](const Tensor& out) {
                       if (!t->requires_grad) return;
                       std::vector<double> gx(t->data.size(), 0.0);
                       kernels::maxpool2x2_backward(out.grad.data(), argmax->data(), gx.data(), C, H, W);
                       t->accumulate_grad(gx);
                   });
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.size());
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double z = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        z += p[i];
    }
    for (auto& v : p) v /= z;
    return p;
}

TensorPtr softmax_cross_entropy(const TensorPtr& logits, int target) {
    if (logits->size() < 2)
        throw ContractError("softmax_cross_entropy needs at least 2 logits");
    if (target < 0 || target >= logits->size())
        throw IndexError("softmax_cross_entropy: target " + std::to_string(target) +
                         " out of range for " + std::to_string(logits->size()) + " classes");
    auto probs = softmax(logits->data);
    double mx = logits->data[0];
    for (double v : logits->data) mx = std::max(mx, v);
    double lse = 0.0;
    for (double v : logits->data) lse += std::exp(v - mx);
    const double loss = std::log(lse) + mx - logits->data[static_cast<size_t>(target)];
    if (!std::isfinite(loss)) throw NumericError("softmax_cross_entropy produced non-finite loss");
    return make_op({1}, {loss}, "softmax_xent", {logits},
                   [logits, target, probs = std::move(probs)](const Tensor& out) {
                       if (!logits->requires_grad) return;
                       std::vector<double> g(probs.size());
                       for (size_t i = 0; i < g.size(); ++i)
                           g[i] = (probs[i] - (static_cast<int>(i) == target ? 1.0 : 0.0)) * out.grad[0];
                       logits->accumulate_grad(g);
                   });
}

namespace {

// Iterative DFS post-order; node appears after all of its parents.
void topo_order(const TensorPtr& root, std::vector<TensorPtr>& order) {
    std::unordered_set<const Tensor*> visited;
    std::vector<std::pair<TensorPtr, size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorPtr p = node->parents[next++];
            if (visited.insert(p.get()).second) stack.emplace_back(std::move(p), 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
}

} // namespace

void backward(const TensorPtr& root) {
    if (!root->is_scalar())
        throw ContractError("backward requires a scalar root, got " + shape_str(root->shape));
    if (!root->requires_grad) return;
    std::vector<TensorPtr> order;
    topo_order(root, order);
    // Interior nodes get a fresh propagation buffer each sweep; leaf grads
    // accumulate across sweeps until explicitly zeroed.
    for (auto& t : order)
        if (!t->parents.empty()) t->zero_grad();
    const double one = 1.0;
    root->accumulate_grad(std::span<const double>(&one, 1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const Tensor& node = **it;
        if (!node.backward_fn) continue;
        if (node.grad.empty()) continue; // no gradient reached this node
        node.backward_fn(node);
    }
}

void zero_grad_graph(const TensorPtr& root) {
    std::vector<TensorPtr> order;
    topo_order(root, order);
    for (auto& t : order) t->zero_grad();
}

void sgd_step(const std::vector<TensorPtr>& params, double lr, double momentum,
              std::vector<std::vector<double>>& velocity) {
    if (lr <= 0.0) throw ConfigError("sgd_step: lr must be positive");
    if (velocity.size() != params.size()) velocity.assign(params.size(), {});
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        if (p.grad.empty()) continue;
        if (p.grad.size() != p.data.size()) throw DimensionError("sgd_step: grad/param size mismatch");
        auto& v = velocity[i];
        if (v.size() != p.data.size()) v.assign(p.data.size(), 0.0);
        for (size_t j = 0; j < p.data.size(); ++j) {
            v[j] = momentum * v[j] + p.grad[j];
            p.data[j] -= lr * v[j];
        }
    }
}

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double linf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace gcd
