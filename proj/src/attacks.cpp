#include "gcd/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "gcd/detectors.hpp"
#include "gcd/errors.hpp"
#include "gcd/rng.hpp"
#include "gcd/sensitivity.hpp"

namespace gcd::attacks {

std::string kind_name(Kind kind) {
    switch (kind) {
        case Kind::Fgsm: return "fgsm";
        case Kind::Pgd: return "pgd";
        case Kind::DeepFool: return "deepfool";
        case Kind::CwL2: return "cw";
        case Kind::Ddn: return "ddn";
    }
    return "?";
}

Kind kind_from_name(const std::string& name) {
    if (name == "fgsm") return Kind::Fgsm;
    if (name == "pgd") return Kind::Pgd;
    if (name == "deepfool") return Kind::DeepFool;
    if (name == "cw") return Kind::CwL2;
    if (name == "ddn") return Kind::Ddn;
    throw ConfigError("unknown attack kind '" + name + "'");
}

namespace {

int argmax_of(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

void clip01(std::vector<double>& v) {
    for (auto& x : v) x = std::clamp(x, 0.0, 1.0);
}

void clamp_linf_ball(std::vector<double>& v, const std::vector<double>& center, double eps) {
    for (size_t i = 0; i < v.size(); ++i)
        v[i] = std::clamp(v[i], center[i] - eps, center[i] + eps);
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Ties the grey-box base gradient and the optional white-box detector term
/// together. The DET_IS branch enters straight-through: the gradient of the
/// detector loss with respect to its gradient-map input is applied to the
/// image directly (the tape is first-order only).
struct GradSource {
    const nn::Classifier* model;
    const detectors::DetectorEnsemble* ensemble = nullptr;
    double beta = 0.0;

    bool whitebox() const { return ensemble != nullptr && beta != 0.0; }

    // grad of CE(f(x), label) wrt x; logits_out receives the forward logits
    std::vector<double> base_ce_grad(const std::vector<double>& x, int label,
                                     std::vector<double>* logits_out = nullptr) const {
        auto f = model->forward(x, /*input_grad=*/true);
        if (logits_out) *logits_out = f.logits->data;
        auto loss = softmax_cross_entropy(f.logits, label);
        backward(loss);
        return f.input->grad;
    }

    // grad wrt x of CE(DET_org(x), benign) + CE(DET_IS(G(x, ŷ)), benign)
    std::vector<double> detector_benign_grad(const std::vector<double>& x) const {
        auto fo = ensemble->org.net().forward(x, /*input_grad=*/true);
        backward(softmax_cross_entropy(fo.logits, detectors::kBenignClass));
        std::vector<double> g = fo.input->grad;

        auto gmap = sensitivity::gradient_map(*model, x);
        auto fi = ensemble->is.net().forward(gmap, /*input_grad=*/true);
        backward(softmax_cross_entropy(fi.logits, detectors::kBenignClass));
        for (size_t i = 0; i < g.size(); ++i) g[i] += fi.input->grad[i];
        return g;
    }

    // ascent direction for untargeted attacks: ∂[CE(x, label) - beta*L_det]/∂x
    std::vector<double> untargeted_ascent(const std::vector<double>& x, int label,
                                          std::vector<double>* logits_out = nullptr) const {
        auto g = base_ce_grad(x, label, logits_out);
        if (whitebox()) {
            auto d = detector_benign_grad(x);
            for (size_t i = 0; i < g.size(); ++i) g[i] -= beta * d[i];
        }
        return g;
    }

    // descent objective gradient for targeted attacks: ∂[CE(x, target) + beta*L_det]/∂x
    std::vector<double> targeted_descent(const std::vector<double>& x, int target,
                                         std::vector<double>* logits_out = nullptr) const {
        auto g = base_ce_grad(x, target, logits_out);
        if (whitebox()) {
            auto d = detector_benign_grad(x);
            for (size_t i = 0; i < g.size(); ++i) g[i] += beta * d[i];
        }
        return g;
    }
};

int resolve_original_label(const nn::Classifier& model, const std::vector<double>& x,
                           int original_label) {
    return original_label >= 0 ? original_label : model.predict(x);
}

int resolve_target(const nn::Classifier& model, const std::vector<double>& x,
                   const AttackConfig& config, int label_clean) {
    int t = config.target_class;
    if (t < 0) {
        // least-likely class of the clean prediction
        auto logits = model.logits_of(x);
        t = static_cast<int>(std::min_element(logits.begin(), logits.end()) - logits.begin());
    }
    if (t == label_clean)
        throw ContractError("targeted attack: target equals the clean prediction");
    if (t >= model.num_classes) throw IndexError("targeted attack: target class out of range");
    return t;
}

AdversarialExample finish(const nn::Classifier& model, std::vector<double> clean,
                          std::vector<double> perturbed, int label_clean, int target,
                          Mode mode, int iterations,
                          const detectors::DetectorEnsemble* ensemble = nullptr) {
    AdversarialExample ex;
    ex.label_clean = label_clean;
    ex.target = target;
    ex.iterations = iterations;
    ex.label_adv = model.predict(perturbed);
    std::vector<double> delta(perturbed.size());
    for (size_t i = 0; i < delta.size(); ++i) delta[i] = perturbed[i] - clean[i];
    ex.l2 = l2_norm(delta);
    ex.linf = linf_norm(delta);
    ex.success = mode == Mode::Untargeted ? ex.label_adv != label_clean
                                          : (ex.label_adv == target && target != label_clean);
    if (ensemble) {
        ex.evaded_detector = ensemble->verdict(perturbed).is_benign();
        ex.success = ex.success && ex.evaded_detector;
    }
    ex.clean = std::move(clean);
    ex.perturbed = std::move(perturbed);
    return ex;
}

void validate(const AttackConfig& config) {
    if (config.epsilon < 0.0) throw ConfigError("attack: epsilon must be >= 0");
    if (config.steps < 1) throw ConfigError("attack: steps must be >= 1");
    if (config.beta < 0.0) throw ConfigError("attack: beta must be >= 0");
}

AdversarialExample fgsm_impl(const GradSource& src, const std::vector<double>& x,
                             const AttackConfig& config, int original_label) {
    validate(config);
    if (config.mode == Mode::Targeted)
        throw ConfigError("fgsm has no targeted version");
    const auto& model = *src.model;
    const int label = resolve_original_label(model, x, original_label);
    auto g = src.untargeted_ascent(x, label);
    std::vector<double> xp(x.size());
    for (size_t i = 0; i < x.size(); ++i) xp[i] = x[i] + config.epsilon * sign_of(g[i]);
    clip01(xp);
    return finish(model, x, std::move(xp), label, -1, Mode::Untargeted, 1, src.ensemble);
}

AdversarialExample pgd_impl(const GradSource& src, const std::vector<double>& x,
                            const AttackConfig& config, int original_label) {
    validate(config);
    if (config.steps * config.step_size < config.epsilon)
        std::fprintf(stderr, "pgd: steps*step_size = %g is below epsilon = %g\n",
                     config.steps * config.step_size, config.epsilon);
    const auto& model = *src.model;
    const int label = resolve_original_label(model, x, original_label);
    const int target = config.mode == Mode::Targeted ? resolve_target(model, x, config, label) : -1;

    std::vector<double> xt = x;
    if (config.random_start) {
        auto rng = make_engine(derive_seed(config.seed, 0x9d));
        std::uniform_real_distribution<double> u(-config.epsilon, config.epsilon);
        for (auto& v : xt) v += u(rng);
        clip01(xt);
        clamp_linf_ball(xt, x, config.epsilon);
    }
    for (int k = 0; k < config.steps; ++k) {
        std::vector<double> g = config.mode == Mode::Untargeted
                                    ? src.untargeted_ascent(xt, label)
                                    : src.targeted_descent(xt, target);
        const double dir = config.mode == Mode::Untargeted ? 1.0 : -1.0;
        for (size_t i = 0; i < xt.size(); ++i) xt[i] += dir * config.step_size * sign_of(g[i]);
        clip01(xt);
        clamp_linf_ball(xt, x, config.epsilon);
    }
    return finish(model, x, std::move(xt), label, target, config.mode, config.steps, src.ensemble);
}

AdversarialExample deepfool_impl(const GradSource& src, const std::vector<double>& x,
                                 const AttackConfig& config, int original_label) {
    validate(config);
    if (config.mode == Mode::Targeted)
        throw ConfigError("deepfool has no targeted version");
    if (src.whitebox())
        throw ConfigError("deepfool has no combined-loss white-box form; use pgd/cw/ddn/fgsm");
    const auto& model = *src.model;
    const int label = resolve_original_label(model, x, original_label);

    if (model.predict(x) != label)
        return finish(model, x, x, label, -1, Mode::Untargeted, 0, src.ensemble);

    const size_t dim = x.size();
    std::vector<double> r_tot(dim, 0.0);
    int it = 0;
    for (; it < config.deepfool_max_steps; ++it) {
        std::vector<double> xp(dim);
        for (size_t i = 0; i < dim; ++i) xp[i] = x[i] + config.overshoot * r_tot[i];
        clip01(xp);
        auto logits = model.logits_of(xp);
        if (argmax_of(logits) != label) break;

        auto grads = sensitivity::logit_input_gradients(model, xp);
        double best_ratio = std::numeric_limits<double>::infinity();
        int best_j = -1;
        double best_f = 0.0, best_w2 = 0.0;
        std::vector<double> best_w;
        for (int j = 0; j < model.num_classes; ++j) {
            if (j == label) continue;
            std::vector<double> w(dim);
            double w2 = 0.0;
            for (size_t i = 0; i < dim; ++i) {
                w[i] = grads[static_cast<size_t>(j)][i] - grads[static_cast<size_t>(label)][i];
                w2 += w[i] * w[i];
            }
            if (w2 < 1e-24) continue;
            const double fj = logits[static_cast<size_t>(j)] - logits[static_cast<size_t>(label)];
            const double ratio = std::abs(fj) / std::sqrt(w2);
            if (ratio < best_ratio) {
                best_ratio = ratio;
                best_j = j;
                best_f = fj;
                best_w2 = w2;
                best_w = std::move(w);
            }
        }
        if (best_j < 0) break; // all candidate hyperplanes degenerate

        const double scale = (std::abs(best_f) + 1e-4) / best_w2;
        for (size_t i = 0; i < dim; ++i) r_tot[i] += scale * best_w[i];
    }

    std::vector<double> xp(dim);
    for (size_t i = 0; i < dim; ++i) xp[i] = x[i] + config.overshoot * r_tot[i];
    clip01(xp);
    return finish(model, x, std::move(xp), label, -1, Mode::Untargeted, it, src.ensemble);
}

AdversarialExample cw_impl(const GradSource& src, const std::vector<double>& x,
                           const AttackConfig& config, int original_label) {
    validate(config);
    const auto& model = *src.model;
    const int label = resolve_original_label(model, x, original_label);
    const int target = config.mode == Mode::Targeted ? resolve_target(model, x, config, label) : -1;
    const size_t dim = x.size();

    // change of variable keeps pixels strictly inside (0,1)
    std::vector<double> w0(dim);
    for (size_t i = 0; i < dim; ++i) {
        const double v = std::clamp(x[i], 1e-6, 1.0 - 1e-6) * 2.0 - 1.0;
        w0[i] = std::atanh(v);
    }
    auto x_const = Tensor::make(model.input_shape, x, false);

    double c_lo = 1e-3, c_hi = 1e2;
    double c = 1.0;
    bool any_success = false;
    double best_l2 = std::numeric_limits<double>::infinity();
    std::vector<double> best_x;

    for (int round = 0; round < config.cw_c_search_steps; ++round) {
        auto w = Tensor::make(model.input_shape, w0, true);
        std::vector<double> adam_m(dim, 0.0), adam_v(dim, 0.0);
        bool round_success = false;
        double window_best = std::numeric_limits<double>::infinity();
        double prev_window_best = std::numeric_limits<double>::infinity();

        for (int step = 0; step < config.cw_inner_steps; ++step) {
            auto x_adv = affine(tanh_op(w), 0.5, 0.5);
            auto f = model.forward(x_adv);
            const auto& logits = f.logits->data;

            int zt, zo; // hinge on logits[zt] - logits[zo] + confidence
            if (config.mode == Mode::Untargeted) {
                zt = label;
                zo = -1;
                for (int j = 0; j < model.num_classes; ++j)
                    if (j != label && (zo < 0 || logits[static_cast<size_t>(j)] > logits[static_cast<size_t>(zo)]))
                        zo = j;
            } else {
                zo = target;
                zt = -1;
                for (int j = 0; j < model.num_classes; ++j)
                    if (j != target && (zt < 0 || logits[static_cast<size_t>(j)] > logits[static_cast<size_t>(zt)]))
                        zt = j;
            }
            auto hinge = relu(affine(sub(select(f.logits, zt), select(f.logits, zo)), 1.0,
                                     config.cw_confidence));
            auto obj = add(sum_squares(sub(x_adv, x_const)), affine(hinge, c, 0.0));

            w->zero_grad();
            backward(obj);
            std::vector<double> g = w->grad;
            if (src.whitebox()) {
                auto d = src.detector_benign_grad(x_adv->data);
                for (size_t i = 0; i < dim; ++i) {
                    const double th = std::tanh(w->data[i]);
                    g[i] += c * src.beta * d[i] * 0.5 * (1.0 - th * th);
                }
            }

            // Adam on w
            const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
            const double t = step + 1;
            for (size_t i = 0; i < dim; ++i) {
                adam_m[i] = b1 * adam_m[i] + (1 - b1) * g[i];
                adam_v[i] = b2 * adam_v[i] + (1 - b2) * g[i] * g[i];
                const double mh = adam_m[i] / (1 - std::pow(b1, t));
                const double vh = adam_v[i] / (1 - std::pow(b2, t));
                w->data[i] -= config.cw_lr * mh / (std::sqrt(vh) + eps);
            }

            // bookkeeping on the pre-step candidate; the base attack's own
            // success criterion picks the returned example, the detector
            // only enters through the combined-loss gradient
            const int pred = argmax_of(logits);
            const bool flipped = config.mode == Mode::Untargeted ? pred != label
                                                                 : (pred == target && target != label);
            if (flipped) {
                round_success = true;
                any_success = true;
                double l2 = 0.0;
                for (size_t i = 0; i < dim; ++i) {
                    const double dlt = x_adv->data[i] - x[i];
                    l2 += dlt * dlt;
                }
                l2 = std::sqrt(l2);
                if (l2 < best_l2) {
                    best_l2 = l2;
                    best_x = x_adv->data;
                }
            }

            const double ov = obj->item();
            window_best = std::min(window_best, ov);
            if ((step + 1) % 25 == 0) {
                if (window_best > 0.9999 * prev_window_best && std::isfinite(prev_window_best)) break;
                prev_window_best = window_best;
                window_best = std::numeric_limits<double>::infinity();
            }
        }

        if (round_success)
            c_hi = c;
        else
            c_lo = c;
        c = std::sqrt(c_lo * c_hi);
    }

    std::vector<double> xp = any_success ? best_x : x;
    clip01(xp);
    auto ex = finish(model, x, std::move(xp), label, target, config.mode,
                     config.cw_c_search_steps * config.cw_inner_steps, src.ensemble);
    if (!any_success) ex.success = false;
    return ex;
}

AdversarialExample ddn_impl(const GradSource& src, const std::vector<double>& x,
                            const AttackConfig& config, int original_label) {
    validate(config);
    const auto& model = *src.model;
    const int label = resolve_original_label(model, x, original_label);
    const int target = config.mode == Mode::Targeted ? resolve_target(model, x, config, label) : -1;
    const size_t dim = x.size();

    std::vector<double> delta(dim, 0.0);
    double rho = config.ddn_init_norm;
    double best_l2 = std::numeric_limits<double>::infinity();
    std::vector<double> best_x;

    for (int k = 0; k < config.steps; ++k) {
        std::vector<double> x_adv(dim);
        for (size_t i = 0; i < dim; ++i) x_adv[i] = x[i] + delta[i];
        clip01(x_adv);

        std::vector<double> logits;
        std::vector<double> g = config.mode == Mode::Untargeted
                                    ? src.untargeted_ascent(x_adv, label, &logits)
                                    : src.targeted_descent(x_adv, target, &logits);
        const int pred = argmax_of(logits);
        const bool is_adv = config.mode == Mode::Untargeted ? pred != label : pred == target;

        if (is_adv) {
            std::vector<double> d2(dim);
            for (size_t i = 0; i < dim; ++i) d2[i] = x_adv[i] - x[i];
            const double l2 = l2_norm(d2);
            if (l2 < best_l2) {
                best_l2 = l2;
                best_x = x_adv;
            }
        }

        rho *= is_adv ? (1.0 - config.ddn_gamma) : (1.0 + config.ddn_gamma);

        const double alpha = 0.01 + 0.99 * 0.5 * (1.0 + std::cos(M_PI * k / config.steps));
        const double gn = l2_norm(g);
        const double dir = config.mode == Mode::Untargeted ? 1.0 : -1.0;
        if (gn > 1e-12)
            for (size_t i = 0; i < dim; ++i) delta[i] += dir * alpha * g[i] / gn;

        const double dn = l2_norm(delta);
        if (dn > 1e-12)
            for (size_t i = 0; i < dim; ++i) delta[i] *= rho / dn;

        // keep x + delta inside the pixel box
        for (size_t i = 0; i < dim; ++i)
            delta[i] = std::clamp(x[i] + delta[i], 0.0, 1.0) - x[i];
    }

    std::vector<double> xp;
    if (best_x.empty()) {
        xp.resize(dim);
        for (size_t i = 0; i < dim; ++i) xp[i] = x[i] + delta[i];
        clip01(xp);
    } else {
        xp = best_x;
    }
    auto ex = finish(model, x, std::move(xp), label, target, config.mode, config.steps, src.ensemble);
    if (best_x.empty()) ex.success = false;
    return ex;
}

AdversarialExample dispatch(const GradSource& src, const std::vector<double>& x,
                            const AttackConfig& config, int original_label) {
    switch (config.kind) {
        case Kind::Fgsm: return fgsm_impl(src, x, config, original_label);
        case Kind::Pgd: return pgd_impl(src, x, config, original_label);
        case Kind::DeepFool: return deepfool_impl(src, x, config, original_label);
        case Kind::CwL2: return cw_impl(src, x, config, original_label);
        case Kind::Ddn: return ddn_impl(src, x, config, original_label);
    }
    throw ConfigError("unknown attack kind");
}

} // namespace

AdversarialExample fgsm(const nn::Classifier& model, const std::vector<double>& x,
                        const AttackConfig& config, int original_label) {
    return fgsm_impl(GradSource{&model}, x, config, original_label);
}

AdversarialExample pgd(const nn::Classifier& model, const std::vector<double>& x,
                       const AttackConfig& config, int original_label) {
    return pgd_impl(GradSource{&model}, x, config, original_label);
}

AdversarialExample deepfool(const nn::Classifier& model, const std::vector<double>& x,
                            const AttackConfig& config, int original_label) {
    return deepfool_impl(GradSource{&model}, x, config, original_label);
}

AdversarialExample cw_l2(const nn::Classifier& model, const std::vector<double>& x,
                         const AttackConfig& config, int original_label) {
    return cw_impl(GradSource{&model}, x, config, original_label);
}

AdversarialExample ddn(const nn::Classifier& model, const std::vector<double>& x,
                       const AttackConfig& config, int original_label) {
    return ddn_impl(GradSource{&model}, x, config, original_label);
}

AdversarialExample run_attack(const nn::Classifier& model, const std::vector<double>& x,
                              const AttackConfig& config, int original_label) {
    return dispatch(GradSource{&model}, x, config, original_label);
}

AdversarialExample whitebox_wrap(const nn::Classifier& model,
                                 const detectors::DetectorEnsemble& ensemble,
                                 const std::vector<double>& x, const AttackConfig& config,
                                 int original_label) {
    return dispatch(GradSource{&model, &ensemble, config.beta}, x, config, original_label);
}

BatchStats summarize(const std::vector<AdversarialExample>& examples) {
    BatchStats s;
    s.total = static_cast<int>(examples.size());
    s.empty_input = examples.empty();
    if (examples.empty()) return s;
    std::vector<double> l2s, linfs;
    for (const auto& ex : examples) {
        if (!ex.success) continue;
        ++s.successes;
        l2s.push_back(ex.l2);
        linfs.push_back(ex.linf);
    }
    s.success_rate = static_cast<double>(s.successes) / static_cast<double>(s.total);
    auto median = [](std::vector<double> v) {
        if (v.empty()) return 0.0;
        std::sort(v.begin(), v.end());
        const size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        double s2 = 0.0;
        for (double x : v) s2 += x;
        return s2 / static_cast<double>(v.size());
    };
    s.mean_l2 = mean(l2s);
    s.median_l2 = median(l2s);
    s.mean_linf = mean(linfs);
    s.median_linf = median(linfs);
    return s;
}

namespace {

AdversarialBatch batch_impl(const GradSource& src, const data::Dataset& dataset,
                            const AttackConfig& config) {
    if (src.model->trainable())
        throw ContractError("attack_batch: freeze the model (set_trainable(false)) first");
    AdversarialBatch batch;
    batch.examples.resize(dataset.items.size());
    const auto n = static_cast<std::int64_t>(dataset.items.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        AttackConfig cfg = config;
        cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
        batch.examples[static_cast<size_t>(i)] =
            dispatch(src, dataset.items[static_cast<size_t>(i)].x, cfg, -1);
    }
    batch.stats = summarize(batch.examples);
    return batch;
}

} // namespace

AdversarialBatch attack_batch(const nn::Classifier& model, const data::Dataset& dataset,
                              const AttackConfig& config) {
    return batch_impl(GradSource{&model}, dataset, config);
}

AdversarialBatch whitebox_attack_batch(const nn::Classifier& model,
                                       const detectors::DetectorEnsemble& ensemble,
                                       const data::Dataset& dataset, const AttackConfig& config) {
    return batch_impl(GradSource{&model, &ensemble, config.beta}, dataset, config);
}

} // namespace gcd::attacks
