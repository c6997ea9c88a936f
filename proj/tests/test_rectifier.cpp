#include <doctest.h>

#include <cmath>

#include "gcd/errors.hpp"
#include "gcd/rectifier.hpp"

#include "testutil.hpp"

using namespace gcd;
using namespace gcd::rectifier;

TEST_CASE("build_mask: threshold, boundaries, monotonicity, degeneracy") {
    const std::vector<double> saliency{0.0, 0.5, 1.0};
    const std::vector<double> image{0.2, 0.4, 0.6};

    auto plan = build_mask(saliency, image, 0.6, 0.5);
    CHECK(plan.threshold == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(plan.suspect == std::vector<std::uint8_t>{0, 0, 1});
    CHECK(plan.suspect_count == 1);

    CHECK(build_mask(saliency, image, 1.0, 0.5).suspect_count == 0);
    // alpha 0: everything strictly above g_min
    CHECK(build_mask(saliency, image, 0.0, 0.5).suspect_count == 2);

    int prev = 1 << 20;
    for (double a = 0.1; a <= 0.91; a += 0.1) {
        const int count = build_mask(saliency, image, a, 0.5).suspect_count;
        CHECK(count <= prev);
        prev = count;
    }

    auto degenerate = build_mask({0.3, 0.3, 0.3}, image, 0.5, 0.5);
    CHECK(degenerate.degenerate);
    CHECK(degenerate.suspect_count == 0);

    // image moments are the population mean/std
    CHECK(plan.mu == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(plan.sigma == doctest::Approx(std::sqrt(((0.04) + 0.0 + 0.04) / 3.0)).epsilon(1e-12));

    CHECK_THROWS_AS(build_mask(saliency, image, -0.1, 0.5), ConfigError);
    CHECK_THROWS_AS(build_mask(saliency, image, 0.5, 1.5), ConfigError);
    CHECK_THROWS_AS(build_mask({0.1}, image, 0.5, 0.5), DimensionError);
}

TEST_CASE("apply_mask: identity cases and locality") {
    const auto image = testutil::random_vec(64, 12, 0, 1);
    const auto saliency = testutil::random_vec(64, 13, 0, 1);

    auto none = build_mask(saliency, image, 1.0, 0.5);
    CHECK(apply_mask(image, none, 7) == image); // empty suspect set

    auto plan = build_mask(saliency, image, 0.3, 0.0);
    CHECK(apply_mask(image, plan, 7) == image); // bernoulli 0 keeps everything

    auto active = build_mask(saliency, image, 0.3, 1.0);
    auto masked = apply_mask(image, active, 7);
    for (size_t i = 0; i < image.size(); ++i)
        if (!active.suspect[i]) CHECK(masked[i] == image[i]);

    // deterministic under seed
    CHECK(apply_mask(image, active, 7) == masked);
    CHECK(apply_mask(image, active, 8) != masked);
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

// E[clip(N(mu, sigma), 0, 1)]
double clipped_normal_mean(double mu, double sigma) {
    const double a = (0.0 - mu) / sigma, b = (1.0 - mu) / sigma;
    const double mid = mu * (normal_cdf(b) - normal_cdf(a)) - sigma * (normal_pdf(b) - normal_pdf(a));
    return mid + (1.0 - normal_cdf(b)) * 1.0;
}

} // namespace

TEST_CASE("apply_mask replacement statistics match the clipped normal") {
    const size_t n = 10000;
    auto image = testutil::random_vec(n, 5, 0.1, 0.9);
    std::vector<double> saliency(n, 1.0);
    saliency[0] = 0.0; // one cold pixel so g_max > g_min; the rest are suspects
    auto plan = build_mask(saliency, image, 0.5, 1.0);
    REQUIRE(plan.suspect_count == static_cast<int>(n - 1));

    auto masked = apply_mask(image, plan, 99);
    double mean = 0.0;
    size_t count = 0;
    for (size_t i = 1; i < n; ++i) {
        mean += masked[i];
        ++count;
    }
    mean /= static_cast<double>(count);
    const double expected = clipped_normal_mean(plan.mu, plan.sigma);
    CHECK(std::abs(mean - expected) <= 3.0 * plan.sigma / std::sqrt(static_cast<double>(count)));
}

namespace {

nn::Classifier constant_detector_net(std::uint64_t seed, double benign_bias) {
    auto net = nn::build_small_cnn({1, 8, 8}, 2, seed);
    // zero every feature parameter: logits reduce to the FC bias
    for (auto& p : net.parameters()) std::fill(p->data.begin(), p->data.end(), 0.0);
    net.fc.bias->data = {benign_bias, -benign_bias};
    return net;
}

} // namespace

TEST_CASE("branch saliency: constant detector yields a zero map; FD agreement otherwise") {
    auto constant = constant_detector_net(21, 2.0);
    auto x = testutil::random_vec(64, 31, 0, 1);
    auto zero_map = branch_saliency(constant, x);
    for (double v : zero_map) CHECK(v == 0.0);

    auto net = nn::build_small_cnn({1, 8, 8}, 2, 22);
    auto map = branch_saliency(net, x);
    CHECK(map.size() == x.size());
    for (double v : map) CHECK(v >= 0.0);

    // |dL/dx| against finite differences of the adversarial-class loss
    auto xt = Tensor::make({1, 8, 8}, x, true);
    auto eval = [&] {
        auto f = net.forward(xt);
        auto l = softmax_cross_entropy(f.logits, detectors::kAdversarialClass);
        return testutil::EvalResult{l->item(), testutil::kink_margin(l)};
    };
    auto f = net.forward(x, true);
    backward(softmax_cross_entropy(f.logits, detectors::kAdversarialClass));
    auto res = testutil::gradcheck_tensor(xt, eval, f.input->grad);
    CHECK(res.max_rel_err < 1e-4);
    for (size_t i = 0; i < map.size(); ++i)
        CHECK(map[i] == doctest::Approx(std::abs(f.input->grad[i])).epsilon(1e-12));
}

TEST_CASE("gcd_predict routing follows the detector verdict") {
    auto base = nn::build_small_cnn({1, 8, 8}, 4, 41);
    base.set_trainable(false);
    auto rectifier_net = nn::build_small_cnn({1, 8, 8}, 4, 42);
    rectifier_net.set_trainable(false);

    detectors::DetectorEnsemble benign_ens;
    benign_ens.org = detectors::Detector::from_classifier(constant_detector_net(43, 3.0),
                                                          detectors::Source::Org);
    benign_ens.is = detectors::Detector::from_classifier(constant_detector_net(44, 3.0),
                                                         detectors::Source::Is);
    benign_ens.base = &base;

    auto x = testutil::random_vec(64, 45, 0, 1);
    auto verdict = gcd_predict(base, benign_ens, rectifier_net, x, 0.5, 0.5, 3);
    CHECK(verdict.route == GcdVerdict::Route::BaseModel);
    CHECK(verdict.label == base.predict(x));
    CHECK(verdict.detector.is_benign());

    detectors::DetectorEnsemble adv_ens;
    adv_ens.org = detectors::Detector::from_classifier(constant_detector_net(46, -3.0),
                                                       detectors::Source::Org);
    adv_ens.is = detectors::Detector::from_classifier(constant_detector_net(47, -3.0),
                                                      detectors::Source::Is);
    adv_ens.base = &base;
    auto v2 = gcd_predict(base, adv_ens, rectifier_net, x, 0.5, 0.5, 3);
    CHECK(v2.route == GcdVerdict::Route::Rectifier);
    CHECK_FALSE(v2.detector.is_benign());

    // deterministic under seed even on the stochastic rectifier path
    auto v3 = gcd_predict(base, adv_ens, rectifier_net, x, 0.5, 0.5, 3);
    CHECK(v3.label == v2.label);
    CHECK(v3.route == v2.route);
}

TEST_CASE("build_rectifier counts duplicates and leaves the base untouched") {
    auto base = nn::build_small_cnn({1, 8, 8}, 2, 51);
    base.set_trainable(false);
    const auto before = base.fc.weight->data;

    detectors::DetectorEnsemble ens;
    ens.org = detectors::Detector::from_classifier(nn::build_small_cnn({1, 8, 8}, 2, 52),
                                                   detectors::Source::Org);
    ens.is = detectors::Detector::from_classifier(nn::build_small_cnn({1, 8, 8}, 2, 53),
                                                  detectors::Source::Is);
    ens.base = &base;

    std::vector<LabeledAdversarial> adv;
    for (std::uint64_t s = 0; s < 4; ++s)
        adv.push_back({testutil::random_vec(64, 800 + s, 0, 1), static_cast<int>(s % 2)});

    nn::TrainConfig ft;
    ft.epochs = 1;
    ft.batch_size = 4;
    ft.lr = 0.02;
    ft.seed = 54;
    auto rec = build_rectifier(base, ens, adv, 0.5, 3, 0.5, ft, 9);
    CHECK(base.fc.weight->data == before);
    CHECK(rec.fc.weight->data != before);

    CHECK_THROWS_AS(build_rectifier(base, ens, {}, 0.5, 3, 0.5, ft, 9), ContractError);
    CHECK_THROWS_AS(build_rectifier(base, ens, adv, 0.5, 0, 0.5, ft, 9), ConfigError);
}

TEST_CASE("saliency removal: 0% baseline rate is one on an all-successful batch") {
    auto base = nn::build_small_cnn({1, 8, 8}, 2, 61);
    base.set_trainable(false);
    detectors::DetectorEnsemble ens;
    ens.org = detectors::Detector::from_classifier(nn::build_small_cnn({1, 8, 8}, 2, 62),
                                                   detectors::Source::Org);
    ens.is = detectors::Detector::from_classifier(nn::build_small_cnn({1, 8, 8}, 2, 63),
                                                  detectors::Source::Is);
    ens.base = &base;

    // synthesize "successful" examples: label_clean deliberately set to the
    // non-predicted class so every example counts as fooling the model
    std::vector<attacks::AdversarialExample> batch;
    for (std::uint64_t s = 0; s < 5; ++s) {
        attacks::AdversarialExample ex;
        ex.perturbed = testutil::random_vec(64, 900 + s, 0, 1);
        ex.clean = ex.perturbed;
        ex.label_adv = base.predict(ex.perturbed);
        ex.label_clean = 1 - ex.label_adv;
        ex.success = true;
        batch.push_back(std::move(ex));
    }
    const double percents[] = {5.0, 10.0};
    std::vector<std::vector<std::uint8_t>> flags;
    auto rows = saliency_removal_experiment(base, ens, batch, percents, &flags);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].percent == 0.0);
    CHECK(rows[0].success_rate == 1.0);
    for (const auto& row : rows) {
        CHECK(row.success_rate >= 0.0);
        CHECK(row.success_rate <= 1.0);
    }
    CHECK(flags.size() == 3);
    CHECK(flags[0].size() == batch.size());
}
