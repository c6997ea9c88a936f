#include "gcd/rectifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gcd/errors.hpp"
#include "gcd/rng.hpp"

namespace gcd::rectifier {

std::vector<double> branch_saliency(const nn::Classifier& detector_net,
                                    const std::vector<double>& branch_input) {
    auto f = detector_net.forward(branch_input, /*input_grad=*/true);
    backward(softmax_cross_entropy(f.logits, detectors::kAdversarialClass));
    std::vector<double> g = f.input->grad;
    for (auto& v : g) v = std::abs(v);
    return g;
}

std::vector<double> detector_saliency(const detectors::DetectorEnsemble& ensemble,
                                      const std::vector<double>& x,
                                      detectors::Source* branch_out) {
    const auto verdict = ensemble.verdict(x);
    if (branch_out) *branch_out = verdict.source;
    if (verdict.source == detectors::Source::Org)
        return branch_saliency(ensemble.org.net(), x);
    return branch_saliency(ensemble.is.net(), ensemble.gradient_map_of(x));
}

MaskPlan build_mask(const std::vector<double>& saliency, const std::vector<double>& image,
                    double alpha, double bernoulli_p) {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("build_mask: alpha must be in [0,1]");
    if (bernoulli_p < 0.0 || bernoulli_p > 1.0)
        throw ConfigError("build_mask: bernoulli_p must be in [0,1]");
    if (saliency.size() != image.size())
        throw DimensionError("build_mask: saliency and image sizes differ");

    MaskPlan plan;
    plan.alpha = alpha;
    plan.bernoulli_p = bernoulli_p;
    plan.g_min = *std::min_element(saliency.begin(), saliency.end());
    plan.g_max = *std::max_element(saliency.begin(), saliency.end());
    plan.threshold = alpha * (plan.g_max - plan.g_min) + plan.g_min;
    plan.degenerate = plan.g_max == plan.g_min;

    plan.suspect.assign(image.size(), 0);
    for (size_t i = 0; i < saliency.size(); ++i)
        if (saliency[i] > plan.threshold) {
            plan.suspect[i] = 1;
            ++plan.suspect_count;
        }

    double mu = 0.0;
    for (double v : image) mu += v;
    mu /= static_cast<double>(image.size());
    double var = 0.0;
    for (double v : image) var += (v - mu) * (v - mu);
    var /= static_cast<double>(image.size());
    plan.mu = mu;
    plan.sigma = std::sqrt(var);
    return plan;
}

std::vector<double> apply_mask(const std::vector<double>& image, const MaskPlan& plan,
                               std::uint64_t seed) {
    if (plan.suspect.size() != image.size())
        throw DimensionError("apply_mask: plan was built for a different image size");
    std::vector<double> out = image;
    if (plan.suspect_count == 0 || plan.bernoulli_p == 0.0) return out;
    auto rng = make_engine(seed);
    std::bernoulli_distribution keep_or_replace(plan.bernoulli_p);
    std::normal_distribution<double> replacement(plan.mu, plan.sigma);
    for (size_t i = 0; i < out.size(); ++i) {
        if (!plan.suspect[i]) continue;
        if (!keep_or_replace(rng)) continue;
        out[i] = std::clamp(replacement(rng), 0.0, 1.0);
    }
    return out;
}

std::vector<RemovalRow> saliency_removal_experiment(
    const nn::Classifier& model, const detectors::DetectorEnsemble& ensemble,
    const std::vector<attacks::AdversarialExample>& adv, std::span<const double> percents,
    std::vector<std::vector<std::uint8_t>>* still_fooled) {
    if (adv.empty()) throw ContractError("saliency_removal_experiment: empty adversarial batch");

    const auto n = static_cast<std::int64_t>(adv.size());
    std::vector<std::vector<double>> saliencies(adv.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i)
        saliencies[static_cast<size_t>(i)] = detector_saliency(ensemble, adv[static_cast<size_t>(i)].perturbed);

    std::vector<double> all_percents{0.0};
    all_percents.insert(all_percents.end(), percents.begin(), percents.end());
    if (still_fooled) still_fooled->clear();

    std::vector<RemovalRow> rows;
    for (double pct : all_percents) {
        std::vector<std::uint8_t> fooled(adv.size(), 0);
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < n; ++i) {
            const auto& ex = adv[static_cast<size_t>(i)];
            std::vector<double> masked = ex.perturbed;
            const auto k = static_cast<size_t>(std::llround(pct / 100.0 * static_cast<double>(masked.size())));
            if (k > 0) {
                const auto& sal = saliencies[static_cast<size_t>(i)];
                std::vector<size_t> order(sal.size());
                std::iota(order.begin(), order.end(), 0);
                std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                    return sal[a] != sal[b] ? sal[a] > sal[b] : a < b;
                });
                for (size_t j = 0; j < k && j < order.size(); ++j) masked[order[j]] = 0.0;
            }
            fooled[static_cast<size_t>(i)] = model.predict(masked) != ex.label_clean ? 1 : 0;
        }
        std::int64_t count = 0;
        for (auto f : fooled) count += f;
        rows.push_back({pct, static_cast<double>(count) / static_cast<double>(n)});
        if (still_fooled) still_fooled->push_back(std::move(fooled));
    }
    return rows;
}

nn::Classifier build_rectifier(const nn::Classifier& base,
                               const detectors::DetectorEnsemble& ensemble,
                               const std::vector<LabeledAdversarial>& adv_set, double alpha,
                               int duplicates, double bernoulli_p,
                               const nn::TrainConfig& fine_tune_config, std::uint64_t seed) {
    if (adv_set.empty()) throw ContractError("build_rectifier: empty adversarial set");
    if (duplicates < 1) throw ConfigError("build_rectifier: duplicates must be >= 1");

    data::Dataset masked;
    masked.input_shape = base.input_shape;
    masked.num_classes = base.num_classes;
    masked.items.resize(adv_set.size() * static_cast<size_t>(duplicates));

    const auto n = static_cast<std::int64_t>(adv_set.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& adv = adv_set[static_cast<size_t>(i)];
        auto saliency = detector_saliency(ensemble, adv.perturbed);
        auto plan = build_mask(saliency, adv.perturbed, alpha, bernoulli_p);
        for (int d = 0; d < duplicates; ++d) {
            auto variant = apply_mask(adv.perturbed, plan,
                                      derive_seed(seed, static_cast<std::uint64_t>(i),
                                                  static_cast<std::uint64_t>(d)));
            masked.items[static_cast<size_t>(i) * static_cast<size_t>(duplicates) +
                         static_cast<size_t>(d)] = {std::move(variant), adv.true_label};
        }
    }

    auto [rec, log] = nn::fine_tune(base, masked, fine_tune_config);
    (void)log;
    rec.set_trainable(false);
    return rec;
}

GcdVerdict gcd_predict(const nn::Classifier& base, const detectors::DetectorEnsemble& ensemble,
                       const nn::Classifier& rectifier, const std::vector<double>& x, double alpha,
                       double bernoulli_p, std::uint64_t seed) {
    GcdVerdict out;
    out.detector = ensemble.verdict(x);
    if (out.detector.is_benign()) {
        out.route = GcdVerdict::Route::BaseModel;
        out.label = base.predict(x);
        return out;
    }
    out.route = GcdVerdict::Route::Rectifier;
    const auto saliency = out.detector.source == detectors::Source::Org
                              ? branch_saliency(ensemble.org.net(), x)
                              : branch_saliency(ensemble.is.net(), ensemble.gradient_map_of(x));
    const auto plan = build_mask(saliency, x, alpha, bernoulli_p);
    out.label = rectifier.predict(apply_mask(x, plan, seed));
    return out;
}

} // namespace gcd::rectifier
