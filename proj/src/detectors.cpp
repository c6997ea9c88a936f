#include "gcd/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gcd/errors.hpp"
#include "gcd/rng.hpp"
#include "gcd/sensitivity.hpp"

namespace gcd::detectors {

std::string source_name(Source source) {
    switch (source) {
        case Source::Org: return "org";
        case Source::Is: return "is";
        case Source::Forced: return "forced";
    }
    return "?";
}

double entropy(double p_benign, double p_adversarial) {
    auto term = [](double p) {
        if (p <= 1e-12) return 0.0;
        return p * std::log2(std::min(p, 1.0));
    };
    return -(term(p_benign) + term(p_adversarial));
}

DetectorVerdict make_verdict(double p_benign, double p_adversarial, Source source) {
    DetectorVerdict v;
    v.p_benign = p_benign;
    v.p_adversarial = p_adversarial;
    v.entropy_bits = entropy(p_benign, p_adversarial);
    v.source = source;
    return v;
}

DetectorVerdict ensemble_verdict(const DetectorVerdict& org, const DetectorVerdict& is) {
    return org.entropy_bits < is.entropy_bits ? org : is;
}

double auc(const std::vector<double>& scores_benign, const std::vector<double>& scores_adversarial) {
    if (scores_benign.empty() || scores_adversarial.empty())
        throw ContractError("auc: both score lists must be non-empty");
    struct Entry {
        double score;
        bool adversarial;
    };
    std::vector<Entry> all;
    all.reserve(scores_benign.size() + scores_adversarial.size());
    for (double s : scores_benign) all.push_back({s, false});
    for (double s : scores_adversarial) all.push_back({s, true});
    std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

    // average ranks over ties, then the Mann-Whitney statistic
    double rank_sum_adv = 0.0;
    size_t i = 0;
    while (i < all.size()) {
        size_t j = i;
        while (j + 1 < all.size() && all[j + 1].score == all[i].score) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k)
            if (all[k].adversarial) rank_sum_adv += avg_rank;
        i = j + 1;
    }
    const double na = static_cast<double>(scores_adversarial.size());
    const double nb = static_cast<double>(scores_benign.size());
    return (rank_sum_adv - na * (na + 1.0) / 2.0) / (na * nb);
}

Detector Detector::create(const Shape& input_shape, Source role, std::uint64_t seed) {
    Detector d;
    d.net_ = nn::build_small_cnn(input_shape, 2, seed);
    d.role = role;
    return d;
}

Detector Detector::from_classifier(nn::Classifier net, Source role) {
    if (net.num_classes != 2) throw ContractError("detector nets must have exactly 2 outputs");
    Detector d;
    d.net_ = std::move(net);
    d.role = role;
    d.trained_ = true;
    return d;
}

nn::TrainLog Detector::fit(const std::vector<DetectorSample>& samples, const nn::TrainConfig& config) {
    if (samples.empty()) throw ContractError("detector fit: no samples");
    data::Dataset ds;
    ds.input_shape = net_.input_shape;
    ds.num_classes = 2;
    ds.items.reserve(samples.size());
    for (const auto& s : samples) ds.items.push_back({s.input, s.label});
    auto log = nn::train(net_, ds, config);
    net_.set_trainable(false);
    trained_ = true;
    return log;
}

DetectorVerdict Detector::verdict(const std::vector<double>& branch_input) const {
    if (!trained_) throw StateError("detector (" + source_name(role) + ") used before training");
    auto p = net_.probabilities(branch_input);
    return make_verdict(p[static_cast<size_t>(kBenignClass)], p[static_cast<size_t>(kAdversarialClass)],
                        role);
}

const nn::Classifier& Detector::net() const {
    if (!trained_) throw StateError("detector (" + source_name(role) + ") used before training");
    return net_;
}

void Detector::save(const std::string& path) const {
    if (!trained_) throw StateError("detector save: not trained");
    nn::save_checkpoint(net_, path, source_name(role));
}

Detector Detector::load(const std::string& path) {
    std::string role;
    auto net = nn::load_checkpoint(path, &role);
    Source src;
    if (role == "org")
        src = Source::Org;
    else if (role == "is")
        src = Source::Is;
    else
        throw ParseError("detector load: checkpoint role '" + role + "' is not a detector role");
    net.set_trainable(false);
    return from_classifier(std::move(net), src);
}

DetectorDataset build_detector_dataset(const nn::Classifier& model, const data::Dataset& clean,
                                       const std::vector<attacks::AttackConfig>& attack_configs,
                                       std::uint64_t seed) {
    if (clean.items.empty()) throw ContractError("build_detector_dataset: clean set is empty");

    struct Pending {
        std::vector<double> image;
        int label; // benign/adversarial
    };
    std::vector<Pending> benign, adversarial;
    benign.reserve(clean.items.size());
    for (const auto& ex : clean.items) benign.push_back({ex.x, kBenignClass});

    DetectorDataset out;
    for (size_t a = 0; a < attack_configs.size(); ++a) {
        attacks::AttackConfig cfg = attack_configs[a];
        cfg.seed = derive_seed(seed, 0xa11ac0 + a);
        const std::string label = attacks::kind_name(cfg.kind) +
                                  (cfg.mode == attacks::Mode::Untargeted ? "-u" : "-t");
        auto batch = attacks::attack_batch(model, clean, cfg);
        for (size_t i = 0; i < batch.examples.size(); ++i) {
            const auto& ex = batch.examples[i];
            if (!ex.success) continue;
            adversarial.push_back({ex.perturbed, kAdversarialClass});
            out.adv_pool.push_back({ex.perturbed, clean.items[i].label, ex.label_clean, label});
        }
    }
    if (adversarial.empty())
        throw EmptyAdversarialError("build_detector_dataset: every attack failed on every input");

    // subsample the larger class to an exact balance
    auto rng = make_engine(derive_seed(seed, 0xba1a));
    auto subsample = [&](std::vector<Pending>& v, size_t n) {
        std::shuffle(v.begin(), v.end(), rng);
        v.resize(n);
    };
    const size_t n = std::min(benign.size(), adversarial.size());
    if (benign.size() > n) subsample(benign, n);
    if (adversarial.size() > n) subsample(adversarial, n);

    std::vector<Pending> all;
    all.reserve(2 * n);
    for (auto& p : benign) all.push_back(std::move(p));
    for (auto& p : adversarial) all.push_back(std::move(p));

    out.org_view.resize(all.size());
    out.is_view.resize(all.size());
    const auto total = static_cast<std::int64_t>(all.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < total; ++i) {
        const auto& p = all[static_cast<size_t>(i)];
        out.org_view[static_cast<size_t>(i)] = DetectorSample{p.image, p.label};
        out.is_view[static_cast<size_t>(i)] =
            DetectorSample{sensitivity::gradient_map(model, p.image), p.label};
    }
    return out;
}

std::vector<double> DetectorEnsemble::gradient_map_of(const std::vector<double>& x) const {
    if (!base) throw StateError("detector ensemble has no base model attached");
    return sensitivity::gradient_map(*base, x);
}

DetectorVerdict DetectorEnsemble::verdict_org(const std::vector<double>& x) const {
    return org.verdict(x);
}

DetectorVerdict DetectorEnsemble::verdict_is(const std::vector<double>& x) const {
    return is.verdict(gradient_map_of(x));
}

DetectorVerdict DetectorEnsemble::verdict(const std::vector<double>& x) const {
    return ensemble_verdict(verdict_org(x), verdict_is(x));
}

} // namespace gcd::detectors
