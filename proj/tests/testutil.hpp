#ifndef GCD_TESTS_TESTUTIL_HPP
#define GCD_TESTS_TESTUTIL_HPP

#include <cmath>
#include <functional>
#include <random>
#include <unordered_set>
#include <vector>

#include "gcd/nn.hpp"
#include "gcd/tensor.hpp"

namespace gcd::testutil {

// How close the current forward pass comes to a relu kink or a maxpool tie.
// Finite-difference probes that land inside a kink are skipped: the central
// difference straddles a nondifferentiable point there.
inline double kink_margin(const TensorPtr& root) {
    double margin = std::numeric_limits<double>::infinity();
    std::vector<const Tensor*> stack{root.get()};
    std::unordered_set<const Tensor*> seen{root.get()};
    while (!stack.empty()) {
        const Tensor* node = stack.back();
        stack.pop_back();
        if (std::string_view(node->op) == "relu") {
            for (double v : node->parents[0]->data) margin = std::min(margin, std::abs(v));
        } else if (std::string_view(node->op) == "maxpool2x2") {
            const auto& in = node->parents[0];
            const int C = in->shape[0], H = in->shape[1], W = in->shape[2];
            for (int c = 0; c < C; ++c)
                for (int h = 0; h < H; h += 2)
                    for (int w = 0; w < W; w += 2) {
                        const double* p = in->data.data() + (static_cast<long>(c) * H + h) * W + w;
                        double vals[4] = {p[0], p[1], p[W], p[W + 1]};
                        std::sort(vals, vals + 4);
                        margin = std::min(margin, vals[3] - vals[2]);
                    }
        }
        for (const auto& par : node->parents)
            if (seen.insert(par.get()).second) stack.push_back(par.get());
    }
    return margin;
}

struct EvalResult {
    double value = 0.0;
    double kink = std::numeric_limits<double>::infinity();
};

using EvalFn = std::function<EvalResult()>;

struct GradCheckResult {
    double max_rel_err = 0.0;
    int checked = 0;
    int skipped = 0;
};

/// Central finite differences of `eval` against `analytic` over every element
/// of `t` (mutated in place and restored). Relative error is normalized by
/// the largest gradient magnitude of the tensor.
inline GradCheckResult gradcheck_tensor(const TensorPtr& t, const EvalFn& eval,
                                        const std::vector<double>& analytic, double h = 1e-5) {
    GradCheckResult res;
    std::vector<double> fd(t->data.size(), 0.0);
    std::vector<bool> ok(t->data.size(), false);
    for (size_t i = 0; i < t->data.size(); ++i) {
        const double saved = t->data[i];
        t->data[i] = saved + h;
        const auto up = eval();
        t->data[i] = saved - h;
        const auto down = eval();
        t->data[i] = saved;
        if (up.kink < 8 * h || down.kink < 8 * h) {
            ++res.skipped;
            continue;
        }
        fd[i] = (up.value - down.value) / (2 * h);
        ok[i] = true;
        ++res.checked;
    }
    double scale = 1e-8;
    for (size_t i = 0; i < fd.size(); ++i)
        if (ok[i]) scale = std::max({scale, std::abs(fd[i]), std::abs(analytic[i])});
    for (size_t i = 0; i < fd.size(); ++i)
        if (ok[i]) res.max_rel_err = std::max(res.max_rel_err, std::abs(fd[i] - analytic[i]) / scale);
    return res;
}

inline std::vector<double> random_vec(size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

/// A small random MLP with the given class count (dense/relu stack plus FC).
inline nn::Classifier random_mlp(int inputs, int hidden, int classes, std::uint64_t seed,
                                 bool fc_bias = true) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 0.8);
    auto tensor = [&](Shape shape) {
        auto n = numel(shape);
        std::vector<double> v(static_cast<size_t>(n));
        for (auto& x : v) x = d(rng);
        return Tensor::make(std::move(shape), std::move(v), true);
    };
    nn::Classifier m;
    m.input_shape = {inputs};
    m.num_classes = classes;
    m.features.push_back(nn::DenseLayer{tensor({hidden, inputs}), tensor({hidden})});
    m.features.push_back(nn::ReluLayer{});
    m.fc = nn::DenseLayer{tensor({classes, hidden}), fc_bias ? tensor({classes}) : nullptr};
    return m;
}

inline double rel_vec_err(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 1e-300;
    for (size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

} // namespace gcd::testutil

#endif
