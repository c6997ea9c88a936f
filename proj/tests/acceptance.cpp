// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 4-9 share one grey-box pipeline run; criterion 11 runs a
// reduced pipeline twice and byte-compares every emitted report.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gcd/attacks.hpp"
#include "gcd/data.hpp"
#include "gcd/detectors.hpp"
#include "gcd/harness.hpp"
#include "gcd/nn.hpp"
#include "gcd/rectifier.hpp"
#include "gcd/rng.hpp"
#include "gcd/sensitivity.hpp"

#include "testutil.hpp"

namespace fs = std::filesystem;
using namespace gcd;

namespace {

int g_failures = 0;
int g_lines = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int criterion, bool pass, const std::string& detail, double seconds) {
    if (criterion > 0)
        std::printf("[%2d] %s %s (%.1fs)\n", criterion, pass ? "PASS" : "FAIL", detail.c_str(), seconds);
    else
        std::printf("[ +] %s %s (%.1fs)\n", pass ? "PASS" : "FAIL", detail.c_str(), seconds);
    std::fflush(stdout);
    ++g_lines;
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ---- criterion 1: autodiff vs central finite differences -------------------

bool gradcheck_model(nn::Classifier& model, const std::vector<double>& x, int target,
                     double tol, double& worst, int& skipped) {
    auto xt = Tensor::make(model.input_shape, x, true);
    auto loss = softmax_cross_entropy(model.forward(xt).logits, target);
    backward(loss);
    auto eval = [&] {
        auto l = softmax_cross_entropy(model.forward(xt).logits, target);
        return testutil::EvalResult{l->item(), testutil::kink_margin(l)};
    };
    bool ok = true;
    auto check = [&](const TensorPtr& t) {
        auto res = testutil::gradcheck_tensor(t, eval, t->grad);
        worst = std::max(worst, res.max_rel_err);
        skipped += res.skipped;
        if (res.max_rel_err >= tol) ok = false;
    };
    check(xt);
    for (auto& p : model.parameters()) check(p);
    return ok;
}

void criterion_1() {
    Timer timer;
    double worst = 0.0;
    int skipped = 0;
    bool pass = true;

    // keep the randomized nets away from resting exactly on a relu kink or a
    // pool tie, so the finite-difference probes stay informative
    auto rest_margin = [](nn::Classifier& m, const std::vector<double>& x, int target) {
        auto xt = Tensor::make(m.input_shape, x, true);
        auto loss = softmax_cross_entropy(m.forward(xt).logits, target);
        return testutil::kink_margin(loss);
    };

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        if (seed % 2 == 0) {
            const int classes = 2 + static_cast<int>(seed % 4);
            for (std::uint64_t bump = 0; bump < 20; ++bump) {
                auto m = testutil::random_mlp(5, 7, classes, 100 + seed + 1000 * bump);
                auto x = testutil::random_vec(5, 500 + seed + 1000 * bump, -1.5, 1.5);
                if (rest_margin(m, x, static_cast<int>(seed) % classes) < 1e-3) continue;
                pass = gradcheck_model(m, x, static_cast<int>(seed) % classes, 1e-4, worst, skipped) &&
                       pass;
                break;
            }
        } else {
            for (std::uint64_t bump = 0; bump < 20; ++bump) {
                nn::Classifier m;
                m.input_shape = {1, 6, 6};
                m.num_classes = 3;
                auto rng = make_engine(200 + seed + 1000 * bump);
                std::normal_distribution<double> d(0.0, 0.5);
                auto tensor = [&](Shape shape) {
                    std::vector<double> v(static_cast<size_t>(numel(shape)));
                    for (auto& val : v) val = d(rng);
                    return Tensor::make(std::move(shape), std::move(v), true);
                };
                m.features.push_back(nn::Conv2dLayer{tensor({3, 1, 3, 3}), tensor({3}), 1, 1});
                m.features.push_back(nn::ReluLayer{});
                m.features.push_back(nn::MaxPool2x2Layer{});
                m.features.push_back(nn::FlattenLayer{});
                m.fc = nn::DenseLayer{tensor({3, 27}), tensor({3})};
                auto x = testutil::random_vec(36, 700 + seed + 1000 * bump, 0, 1);
                if (rest_margin(m, x, static_cast<int>(seed) % 3) < 1e-3) continue;
                pass = gradcheck_model(m, x, static_cast<int>(seed) % 3, 1e-4, worst, skipped) && pass;
                break;
            }
        }
    }
    report(1, pass && timer.seconds() < 60.0,
           "gradient correctness: 20 nets, max rel err " + fmt(worst) + " (tol 1e-4), " +
               std::to_string(skipped) + " kink probes skipped",
           timer.seconds());
}

// ---- criterion 2: analytic expansion identity -------------------------------

void criterion_2() {
    Timer timer;
    double worst = 0.0;
    for (int classes : {2, 3, 5})
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            auto m = testutil::random_mlp(4, 6, classes, 900 + 31 * seed + classes,
                                          /*fc_bias=*/seed % 2 == 0);
            auto x = testutil::random_vec(4, 1300 + seed, -1.5, 1.5);
            auto terms = sensitivity::analytic_gradient_expansion(m, x);
            auto autodiff = sensitivity::input_sensitivity(m, x).gradient_map;
            worst = std::max(worst, testutil::rel_vec_err(terms.reconstructed, autodiff));
        }
    report(2, worst < 1e-6,
           "analytic gradient expansion: L in {2,3,5}, max reconstruction err " + fmt(worst) +
               " (tol 1e-6)",
           timer.seconds());
}

// ---- criterion 3: toy boundary study ----------------------------------------

// Declared seeds. Some seeds train toy nets with an all-dead relu corner
// inside the grid; there z = 0 exactly, the point degenerately sits on the
// z-space hyperplane with zero gradient, and the distance/sensitivity
// relation is undefined (the expansion's C1 vanishes together with Term I).
constexpr std::uint64_t kToySeeds[3] = {19, 23, 101};

void criterion_3(const fs::path& work) {
    Timer timer;
    bool pass = true;
    std::string detail = "toy study spearman(dist_z, insen):";
    for (std::uint64_t seed : kToySeeds) {
        auto rep = sensitivity::toy_boundary_study(
            seed, (work / ("toy_study_" + std::to_string(seed) + ".csv")).string());
        detail += " " + fmt(rep.spearman_dist_insen);
        if (!(rep.spearman_dist_insen <= -0.8)) pass = false;
        if (!(rep.insen_at_min_dist >= rep.insen_top_decile)) pass = false;
    }
    report(3, pass && timer.seconds() < 60.0, detail + " (need <= -0.8, 3 declared seeds)",
           timer.seconds());
}

// ---- criteria 4..7 share the desk pipeline ----------------------------------

harness::ExperimentConfig desk_config(const fs::path& work) {
    auto c = harness::default_config();
    c.seed = 7;
    c.out_dir = (work / "greybox").string();
    c.dataset.train_images = (work / "data/train-images.idx").string();
    c.dataset.train_labels = (work / "data/train-labels.idx").string();
    c.dataset.test_images = (work / "data/test-images.idx").string();
    c.dataset.test_labels = (work / "data/test-labels.idx").string();
    c.dataset.train_count = 1200;
    c.dataset.detector_count = 300;
    c.dataset.test_count = 400;
    c.dataset.attack_eval_count = 120;
    c.whitebox.attacks = {"pgd-u", "cw-u", "ddn-u"};
    c.whitebox.eval_count = 60;
    c.alpha_sweep.suites = {"untargeted"};
    c.alpha_sweep.grid = {0.1, 0.3, 0.55, 0.7, 0.9};
    c.alpha_sweep.adv_pool_limit = 120;
    c.alpha_sweep.eval_count = 60;
    return c;
}

const harness::AccuracyRow* find_accuracy(const harness::ReportBundle& b, const std::string& a) {
    for (const auto& r : b.accuracy_table)
        if (r.attack == a) return &r;
    return nullptr;
}

void criterion_4(const harness::ReportBundle& bundle, double pipeline_seconds) {
    Timer timer;
    bool pass = true;
    std::string detail = "insen median ratios:";
    for (const std::string a : {"deepfool-u", "cw-u", "ddn-u"}) {
        bool found = false;
        for (const auto& r : bundle.separation_table)
            if (r.attack == a) {
                found = true;
                detail += " " + a + "=" + fmt(r.ratio);
                if (!(r.ratio >= 2.0)) pass = false;
            }
        if (!found) pass = false;
    }
    for (const auto& r : bundle.separation_table)
        if (r.attack == "fgsm-u" || r.attack == "pgd-u")
            detail += " [" + r.attack + "=" + fmt(r.ratio) + " reported]";
    report(4, pass && pipeline_seconds < 600.0, detail + " (L2 attacks need >= 2)", timer.seconds());
}

void criterion_5(const harness::ReportBundle& bundle, double pipeline_seconds) {
    Timer timer;
    bool pass = !bundle.auc_table.empty();
    double min_ens = 1.0, min_is_l2 = 1.0, min_org_linf = 1.0, worst_gap = 0.0;
    for (const auto& r : bundle.auc_table) {
        min_ens = std::min(min_ens, r.ensemble);
        if (!(r.ensemble >= 0.90)) pass = false;
        const bool l2_attack = r.attack.rfind("deepfool", 0) == 0 || r.attack.rfind("cw", 0) == 0 ||
                               r.attack.rfind("ddn", 0) == 0;
        if (l2_attack && r.attack.ends_with("-u")) {
            min_is_l2 = std::min(min_is_l2, r.det_is);
            if (!(r.det_is >= 0.95)) pass = false;
        }
        if (r.attack == "fgsm-u" || r.attack == "pgd-u" || r.attack == "pgd-t") {
            min_org_linf = std::min(min_org_linf, r.det_org);
            if (!(r.det_org >= 0.95)) pass = false;
        }
        const double gap = std::max(r.det_org, r.det_is) - r.ensemble;
        worst_gap = std::max(worst_gap, gap);
        if (!(gap <= 0.05)) pass = false;
    }
    report(5, pass && pipeline_seconds < 1800.0,
           "grey-box AUC: min ensemble " + fmt(min_ens) + " (>=0.90), min DET_IS on L2-u " +
               fmt(min_is_l2) + " (>=0.95), min DET_org on Linf " + fmt(min_org_linf) +
               " (>=0.95), worst complementarity gap " + fmt(worst_gap) + " (<=0.05); pipeline " +
               fmt(pipeline_seconds) + "s (<1800)",
           timer.seconds());
}

void criterion_6(const harness::ReportBundle& bundle) {
    Timer timer;
    bool pass = true;
    std::string detail = "saliency removal, success at top-5%:";
    for (const std::string a : {"deepfool-u", "cw-u", "ddn-u"}) {
        double at0 = -1.0, at5 = -1.0, at10 = -1.0;
        for (const auto& r : bundle.removal_table) {
            if (r.attack != a) continue;
            if (r.percent == 0.0) at0 = r.success_rate;
            if (r.percent == 5.0) at5 = r.success_rate;
            if (r.percent == 10.0) at10 = r.success_rate;
        }
        if (at0 < 0 || at5 < 0 || at10 < 0) {
            pass = false;
            continue;
        }
        detail += " " + a + "=" + fmt(at5);
        if (!(at0 - at5 >= 0.20)) pass = false;
        if (!(at5 < 1.0 && at10 < 1.0)) pass = false;
    }
    report(6, pass, detail + " (drop from 1.0 must be >= 0.20)", timer.seconds());
}

void criterion_7(const harness::ReportBundle& bundle) {
    Timer timer;
    bool pass = true;
    std::string detail = "recovered accuracy:";
    for (const std::string a : {"deepfool-u", "cw-u", "ddn-u"}) {
        const auto* row = find_accuracy(bundle, a);
        if (!row) {
            pass = false;
            continue;
        }
        detail += " " + a + "=" + fmt(row->gcd_acc_success) + "/base=" + fmt(row->base_acc_success);
        if (!(row->gcd_acc_success >= 0.80)) pass = false;
        if (!(row->base_acc_success <= 0.10)) pass = false; // undefended ~ 0
    }
    const auto* clean = find_accuracy(bundle, "clean");
    if (!clean) {
        pass = false;
    } else {
        detail += " clean gcd=" + fmt(clean->gcd_acc_all) + " base=" + fmt(clean->base_acc_all);
        if (!(clean->base_acc_all - clean->gcd_acc_all <= 0.05)) pass = false;
    }
    if (!(bundle.clean_base_accuracy - bundle.rectifier_clean_accuracy <= 0.05)) pass = false;
    detail += " f_rec clean=" + fmt(bundle.rectifier_clean_accuracy);
    report(7, pass, detail + " (need >= 0.80 recovered, <= 0.05 clean cost)", timer.seconds());
}

// Attack-matrix sanity (spec'd per-operation expectations, not a numbered
// criterion): desk success rates and the relative L2 cost ordering.
void attacks_sanity(const harness::ReportBundle& bundle) {
    Timer timer;
    bool pass = true;
    std::string detail;
    std::map<std::string, const harness::PerturbationRow*> rows;
    for (const auto& r : bundle.perturbation_table) rows[r.attack] = &r;
    auto need = [&](const std::string& a, double min_rate) {
        if (!rows.count(a)) {
            pass = false;
            return;
        }
        detail += " " + a + "=" + fmt(rows[a]->success_rate);
        if (!(rows[a]->success_rate >= min_rate)) pass = false;
    };
    need("fgsm-u", 0.3);
    need("pgd-u", 0.9);
    need("deepfool-u", 0.95);
    need("cw-u", 0.95);
    need("ddn-u", 0.95);
    if (rows.count("cw-u") && std::abs(rows["cw-u"]->success_rate - 1.0) > 0.05) pass = false;
    if (rows.count("deepfool-u") && rows.count("pgd-u") &&
        !(rows["deepfool-u"]->median_l2 < rows["pgd-u"]->median_l2))
        pass = false;
    if (rows.count("cw-u") && rows.count("deepfool-u") &&
        !(rows["cw-u"]->median_l2 <= 1.5 * rows["deepfool-u"]->median_l2))
        pass = false;
    if (rows.count("ddn-u") && rows.count("cw-u")) {
        const double ratio = rows["ddn-u"]->median_l2 / rows["cw-u"]->median_l2;
        detail += " ddn/cw L2 ratio=" + fmt(ratio);
        if (!(ratio >= 0.5 && ratio <= 2.0)) pass = false;
    }
    report(0, pass, "attack matrix sanity (success rates, L2 ordering):" + detail, timer.seconds());
}

void criterion_8(const harness::ExperimentConfig& config) {
    Timer timer;
    auto sweep = harness::run_alpha_sweep(config);
    double lo = -1, hi = -1, best_inner = -1;
    for (const auto& r : sweep.rows) {
        if (r.suite != "untargeted") continue;
        if (r.alpha == 0.1) lo = r.recovered_accuracy;
        else if (r.alpha == 0.9) hi = r.recovered_accuracy;
        else best_inner = std::max(best_inner, r.recovered_accuracy);
    }
    const bool pass = lo >= 0 && hi >= 0 && best_inner > lo && best_inner > hi;
    report(8, pass,
           "alpha sweep: accuracy at 0.1 = " + fmt(lo) + ", best interior = " + fmt(best_inner) +
               ", at 0.9 = " + fmt(hi) + " (interior must exceed both)",
           timer.seconds());
}

void criterion_9(const harness::ExperimentConfig& config) {
    Timer timer;
    auto wb = harness::run_whitebox_eval(config);
    bool pass = true;
    std::string detail;
    std::map<std::string, double> undefended_rate, undefended_l2;
    for (const auto& r : wb.rows)
        if (!r.defended) {
            undefended_rate[r.attack] = r.success_rate;
            undefended_l2[r.attack] = r.mean_l2_success;
        }
    std::map<std::string, double> best_rate, best_l2;
    for (const auto& r : wb.rows)
        if (r.defended && r.success_rate >= best_rate[r.attack]) {
            best_rate[r.attack] = r.success_rate;
            best_l2[r.attack] = r.mean_l2_success;
        }
    for (const std::string a : {"pgd-u", "cw-u"}) {
        detail += " " + a + ": " + fmt(best_rate[a]) + " vs " + fmt(undefended_rate[a]);
        if (!(best_rate[a] < undefended_rate[a])) pass = false;
    }
    for (const auto& [attack, rate] : best_rate) {
        if (rate < 0.5) continue;
        detail += " [" + attack + " L2 " + fmt(best_l2[attack]) + " vs " + fmt(undefended_l2[attack]) + "]";
        if (!(best_l2[attack] > undefended_l2[attack])) pass = false;
    }
    report(9, pass, "white-box defended-vs-undefended success:" + detail, timer.seconds());
}

// ---- criterion 10: oracle equivalences ---------------------------------------

double auc_bruteforce(const std::vector<double>& benign, const std::vector<double>& adv) {
    double wins = 0.0;
    for (double a : adv)
        for (double b : benign) {
            if (a > b) wins += 1.0;
            else if (a == b) wins += 0.5;
        }
    return wins / (static_cast<double>(adv.size()) * static_cast<double>(benign.size()));
}

void criterion_10(const nn::Classifier& desk_model, const data::Dataset& test_slice) {
    Timer timer;
    bool pass = true;
    std::string detail;

    // AUC vs O(n^2) pair counting, exact, with and without ties
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> quant(0, 9);
    for (int t = 0; t < 100 && pass; ++t) {
        std::vector<double> benign(40), adv(40);
        for (auto& v : benign) v = t % 2 ? u(rng) : quant(rng) / 10.0;
        for (auto& v : adv) v = t % 2 ? u(rng) : quant(rng) / 10.0;
        if (detectors::auc(benign, adv) != auc_bruteforce(benign, adv)) pass = false;
    }
    detail += "auc==pair-counting on 100 instances";

    // PGD(steps=1, no random start, step=eps) == FGSM, bit for bit
    attacks::AttackConfig fg;
    fg.kind = attacks::Kind::Fgsm;
    fg.epsilon = 0.2;
    attacks::AttackConfig pg;
    pg.kind = attacks::Kind::Pgd;
    pg.epsilon = 0.2;
    pg.steps = 1;
    pg.step_size = 0.2;
    pg.random_start = false;
    for (size_t i = 0; i < 10 && i < test_slice.items.size(); ++i) {
        auto a = attacks::fgsm(desk_model, test_slice.items[i].x, fg);
        auto b = attacks::pgd(desk_model, test_slice.items[i].x, pg);
        if (a.perturbed != b.perturbed) pass = false;
    }
    detail += "; pgd(1)==fgsm";

    // whitebox beta=0 follows the grey-box gradient exactly
    detectors::DetectorEnsemble ens;
    ens.org = detectors::Detector::from_classifier(
        nn::build_small_cnn(desk_model.input_shape, 2, 410), detectors::Source::Org);
    ens.is = detectors::Detector::from_classifier(
        nn::build_small_cnn(desk_model.input_shape, 2, 411), detectors::Source::Is);
    ens.base = &desk_model;
    attacks::AttackConfig wcfg;
    wcfg.kind = attacks::Kind::Pgd;
    wcfg.epsilon = 0.3;
    wcfg.steps = 5;
    wcfg.step_size = 0.06;
    wcfg.seed = 9;
    wcfg.beta = 0.0;
    for (size_t i = 0; i < 5 && i < test_slice.items.size(); ++i) {
        auto grey = attacks::pgd(desk_model, test_slice.items[i].x, wcfg);
        auto white = attacks::whitebox_wrap(desk_model, ens, test_slice.items[i].x, wcfg);
        if (grey.perturbed != white.perturbed) pass = false;
    }
    detail += "; whitebox(beta=0)==greybox";

    // alpha = 1 masking is the identity
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto image = testutil::random_vec(64, 4000 + s, 0, 1);
        auto saliency = testutil::random_vec(64, 5000 + s, 0, 1);
        auto plan = rectifier::build_mask(saliency, image, 1.0, 1.0);
        if (rectifier::apply_mask(image, plan, s) != image) pass = false;
    }
    detail += "; alpha=1 masking==identity";

    report(10, pass, "oracle equivalences: " + detail, timer.seconds());
}

// ---- criterion 11: reproducibility -------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void criterion_11(const fs::path& work) {
    Timer timer;
    auto c = harness::default_config();
    c.seed = 13;
    c.dataset.train_images = (work / "data/train-images.idx").string();
    c.dataset.train_labels = (work / "data/train-labels.idx").string();
    c.dataset.test_images = (work / "data/test-images.idx").string();
    c.dataset.test_labels = (work / "data/test-labels.idx").string();
    c.dataset.train_count = 300;
    c.dataset.detector_count = 120;
    c.dataset.test_count = 120;
    c.dataset.attack_eval_count = 40;
    c.model_train.epochs = 4;
    c.detector_train.epochs = 4;
    c.rectifier.adv_pool_limit = 80;
    c.rectifier.duplicates = 4;
    c.attack_list.clear();
    for (const auto& label : {"fgsm-u", "pgd-u", "pgd-t", "deepfool-u", "cw-u", "ddn-u"}) {
        auto a = harness::attack_from_label(label);
        if (a.kind == attacks::Kind::CwL2) {
            a.cw_inner_steps = 60;
            a.cw_c_search_steps = 3;
        }
        if (a.kind == attacks::Kind::Ddn) a.steps = 50;
        c.attack_list.push_back(a);
    }

    c.out_dir = (work / "repro_a").string();
    harness::run_greybox_eval(c);
    c.out_dir = (work / "repro_b").string();
    harness::run_greybox_eval(c);

    bool pass = true;
    std::string mismatch;
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(work / "repro_a")) {
        const auto name = entry.path().filename().string();
        if (!name.ends_with(".csv") && !name.ends_with(".jsonl")) continue;
        ++compared;
        if (slurp(entry.path()) != slurp(work / "repro_b" / name)) {
            pass = false;
            mismatch += " " + name;
        }
    }
    if (compared == 0) pass = false;
    report(11, pass,
           "reproducibility: " + std::to_string(compared) + " report files byte-compared" +
               (mismatch.empty() ? "" : "; mismatch:" + mismatch),
           timer.seconds());
}

} // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_work");
    fs::create_directories(work / "data");

    // self-contained desk dataset written and read back through the IDX path
    {
        auto train = data::generate_digit_dataset(1700, derive_seed(7, 1));
        auto test = data::generate_digit_dataset(500, derive_seed(7, 2));
        data::write_mnist_idx(train, (work / "data/train-images.idx").string(),
                              (work / "data/train-labels.idx").string());
        data::write_mnist_idx(test, (work / "data/test-images.idx").string(),
                              (work / "data/test-labels.idx").string());
    }

    criterion_1();
    criterion_2();
    criterion_3(work);

    auto config = desk_config(work);
    Timer pipeline_timer;
    std::printf("     running grey-box pipeline (train %d, detector %d, eval %d)...\n",
                config.dataset.train_count, config.dataset.detector_count,
                config.dataset.attack_eval_count);
    std::fflush(stdout);
    auto bundle = harness::run_greybox_eval(config);
    const double pipeline_seconds = pipeline_timer.seconds();
    std::printf("     pipeline finished in %.1fs\n", pipeline_seconds);

    criterion_4(bundle, pipeline_seconds);
    criterion_5(bundle, pipeline_seconds);
    criterion_6(bundle);
    criterion_7(bundle);
    attacks_sanity(bundle);
    criterion_8(config);
    criterion_9(config);

    {
        auto base = nn::load_checkpoint((fs::path(config.out_dir) / "base.ckpt").string());
        base.set_trainable(false);
        auto test = data::load_mnist_idx(config.dataset.test_images, config.dataset.test_labels, 16);
        criterion_10(base, test);
    }

    criterion_11(work);

    std::printf("acceptance: %d/%d checks passed (11 criteria + 1 sanity block)\n",
                g_lines - g_failures, g_lines);
    return g_failures == 0 ? 0 : 1;
}
