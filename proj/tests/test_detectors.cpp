#include <doctest.h>

#include <cmath>
#include <random>

#include "gcd/detectors.hpp"
#include "gcd/errors.hpp"

#include "gcd/rng.hpp"

#include "testutil.hpp"

using namespace gcd;
using namespace gcd::detectors;

TEST_CASE("binary entropy values and bounds") {
    CHECK(entropy(0.5, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(entropy(1.0, 0.0) == 0.0);
    CHECK(entropy(0.0, 1.0) == 0.0);
    CHECK(entropy(0.9, 0.1) == doctest::Approx(0.4690).epsilon(1e-4));
    for (double p = 0.0; p <= 1.0; p += 0.05) {
        const double h = entropy(p, 1.0 - p);
        CHECK(h >= 0.0);
        CHECK(h <= 1.0 + 1e-12);
        if (p != 0.0 && p != 1.0) CHECK(h > 0.0);
    }
}

TEST_CASE("ensemble gating selects the lower-entropy verdict verbatim") {
    auto org = make_verdict(0.99, 0.01, Source::Org);
    auto is = make_verdict(0.6, 0.4, Source::Is);
    auto pick = ensemble_verdict(org, is);
    CHECK(pick.source == Source::Org);
    CHECK(pick.p_benign == org.p_benign);
    CHECK(pick.p_adversarial == org.p_adversarial);

    // exact tie goes to the sensitivity branch
    auto o2 = make_verdict(0.3, 0.7, Source::Org);
    auto i2 = make_verdict(0.7, 0.3, Source::Is);
    CHECK(o2.entropy_bits == i2.entropy_bits);
    CHECK(ensemble_verdict(o2, i2).source == Source::Is);

    // selection property: the output equals one of the inputs elementwise
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const double a = u(rng), b = u(rng);
        auto vo = make_verdict(a, 1 - a, Source::Org);
        auto vi = make_verdict(b, 1 - b, Source::Is);
        auto v = ensemble_verdict(vo, vi);
        const bool is_org = v.p_benign == vo.p_benign && v.p_adversarial == vo.p_adversarial &&
                            v.source == Source::Org;
        const bool is_is = v.p_benign == vi.p_benign && v.p_adversarial == vi.p_adversarial &&
                           v.source == Source::Is;
        CHECK((is_org || is_is));
    }
}

namespace {

// O(n^2) pair-counting reference
double auc_bruteforce(const std::vector<double>& benign, const std::vector<double>& adv) {
    double wins = 0.0;
    for (double a : adv)
        for (double b : benign) {
            if (a > b)
                wins += 1.0;
            else if (a == b)
                wins += 0.5;
        }
    return wins / (static_cast<double>(adv.size()) * static_cast<double>(benign.size()));
}

} // namespace

TEST_CASE("auc: closed cases and brute-force equivalence") {
    CHECK(auc({0.1, 0.2, 0.3}, {0.7, 0.8}) == 1.0);
    CHECK(auc({0.5, 0.5}, {0.5, 0.5, 0.5}) == 0.5);
    CHECK_THROWS_AS(auc({}, {0.5}), ContractError);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> quant(0, 9);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> benign(50), adv(50);
        for (auto& v : benign) v = t % 2 ? u(rng) : quant(rng) / 10.0; // ties on odd rounds
        for (auto& v : adv) v = t % 2 ? u(rng) : quant(rng) / 10.0;
        CHECK(auc(benign, adv) == auc_bruteforce(benign, adv));
    }
}

TEST_CASE("untrained detectors refuse to judge") {
    Detector d = Detector::create({1, 8, 8}, Source::Org, 3);
    CHECK_FALSE(d.trained());
    CHECK_THROWS_AS(d.verdict(std::vector<double>(64, 0.0)), StateError);
    CHECK_THROWS_AS(d.net(), StateError);
}

TEST_CASE("detector verdicts are probability pairs") {
    auto d = Detector::from_classifier(nn::build_small_cnn({1, 8, 8}, 2, 5), Source::Is);
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto v = d.verdict(testutil::random_vec(64, 600 + s, 0, 1));
        CHECK(v.p_benign + v.p_adversarial == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(v.p_benign >= 0.0);
        CHECK(v.p_adversarial >= 0.0);
        CHECK(v.source == Source::Is);
    }
}

namespace {

nn::Classifier trained_tiny_model() {
    data::Dataset ds;
    ds.input_shape = {1, 8, 8};
    ds.num_classes = 2;
    auto rng = make_engine(10);
    std::uniform_real_distribution<double> noise(0.0, 0.15);
    for (int i = 0; i < 24; ++i) {
        data::Example ex;
        ex.label = i % 2;
        ex.x.assign(64, 0.0);
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 8; ++c)
                ex.x[r * 8 + c] =
                    std::clamp(((ex.label == 0) == (r < 4) ? 0.85 : 0.15) + noise(rng), 0.0, 1.0);
        ds.items.push_back(std::move(ex));
    }
    auto m = nn::build_small_cnn({1, 8, 8}, 2, 8);
    nn::TrainConfig cfg;
    cfg.epochs = 8;
    cfg.batch_size = 4;
    cfg.lr = 0.05;
    cfg.seed = 2;
    nn::train(m, ds, cfg);
    m.set_trainable(false);
    return m;
}

} // namespace

TEST_CASE("detector dataset pairs each clean example with its successful attacks") {
    auto model = trained_tiny_model();
    data::Dataset one;
    one.input_shape = {1, 8, 8};
    one.num_classes = 2;
    one.items.push_back({std::vector<double>(64, 0.7), 0});

    attacks::AttackConfig strong;
    strong.kind = attacks::Kind::Pgd;
    strong.epsilon = 0.9;
    strong.steps = 25;
    strong.step_size = 0.1;
    auto ds = build_detector_dataset(model, one, {strong}, 5);
    CHECK(ds.org_view.size() == 2);
    CHECK(ds.is_view.size() == 2);
    CHECK(ds.adv_pool.size() == 1);
    for (const auto& s : ds.is_view) CHECK(s.input.size() == 64);
    int benign = 0, adversarial = 0;
    for (const auto& s : ds.org_view) (s.label == kBenignClass ? benign : adversarial) += 1;
    CHECK(benign == 1);
    CHECK(adversarial == 1);

    attacks::AttackConfig nothing;
    nothing.kind = attacks::Kind::Fgsm;
    nothing.epsilon = 0.0;
    CHECK_THROWS_AS(build_detector_dataset(model, one, {nothing}, 5), EmptyAdversarialError);
    CHECK_THROWS_AS(build_detector_dataset(model, data::Dataset{{1, 8, 8}, 2, {}}, {strong}, 5),
                    ContractError);
}

TEST_CASE("a fitted detector favors the benign class on its training data") {
    // separable stand-in task: smooth images vs salt-and-pepper noise
    std::vector<DetectorSample> samples;
    auto rng = make_engine(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 24; ++i) {
        DetectorSample s;
        s.label = i % 2;
        s.input.assign(64, 0.0);
        for (auto& v : s.input) v = s.label == kBenignClass ? 0.5 : (u(rng) < 0.5 ? 0.0 : 1.0);
        samples.push_back(std::move(s));
    }
    auto det = Detector::create({1, 8, 8}, Source::Org, 31);
    nn::TrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 4;
    cfg.lr = 0.05;
    cfg.seed = 32;
    cfg.early_stop_accuracy = 0.999;
    det.fit(samples, cfg);
    CHECK(det.trained());
    int benign_checked = 0;
    for (const auto& s : samples) {
        if (s.label != kBenignClass) continue;
        ++benign_checked;
        CHECK(det.verdict(s.input).p_benign > 0.5);
    }
    CHECK(benign_checked == 12);
}

TEST_CASE("detector dataset balances classes under multiple attacks") {
    auto model = trained_tiny_model();
    data::Dataset clean;
    clean.input_shape = {1, 8, 8};
    clean.num_classes = 2;
    auto rng = make_engine(11);
    std::uniform_real_distribution<double> noise(0.0, 0.15);
    for (int i = 0; i < 10; ++i) {
        data::Example ex;
        ex.label = i % 2;
        ex.x.assign(64, 0.0);
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 8; ++c)
                ex.x[r * 8 + c] =
                    std::clamp(((ex.label == 0) == (r < 4) ? 0.85 : 0.15) + noise(rng), 0.0, 1.0);
        clean.items.push_back(std::move(ex));
    }
    attacks::AttackConfig a1;
    a1.kind = attacks::Kind::Pgd;
    a1.epsilon = 0.6;
    a1.steps = 15;
    a1.step_size = 0.08;
    attacks::AttackConfig a2 = a1;
    a2.epsilon = 0.8;
    auto ds = build_detector_dataset(model, clean, {a1, a2}, 6);
    int benign = 0, adversarial = 0;
    for (const auto& s : ds.org_view) (s.label == kBenignClass ? benign : adversarial) += 1;
    CHECK(benign == adversarial); // exact balance after subsampling
    CHECK(ds.org_view.size() == ds.is_view.size());
    for (size_t i = 0; i < ds.org_view.size(); ++i)
        CHECK(ds.org_view[i].label == ds.is_view[i].label);
}
