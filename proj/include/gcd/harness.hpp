#ifndef GCD_HARNESS_HPP
#define GCD_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcd/attacks.hpp"
#include "gcd/data.hpp"
#include "gcd/detectors.hpp"
#include "gcd/nn.hpp"
#include "gcd/rectifier.hpp"

namespace gcd::harness {

struct DatasetSpec {
    std::string kind = "mnist-idx"; // "mnist-idx" | "toy"
    std::string train_images, train_labels;
    std::string test_images, test_labels;
    int train_count = 2000;
    int detector_count = 500;
    int test_count = 500;
    int attack_eval_count = 150; // test-slice size the attack matrix runs on
    data::ToyParams toy;
};

struct RectifierSpec {
    double alpha_untargeted = 0.55;
    double alpha_targeted = 0.6;
    int duplicates = 8;
    double bernoulli_p = 0.5;
    int adv_pool_limit = 240; // adversarial examples used for fine-tuning
};

struct WhiteboxSpec {
    std::vector<std::string> attacks = {"pgd-u", "cw-u"};
    std::vector<double> betas = {0.1, 1.0, 10.0};
    int eval_count = 80;
};

struct AlphaSweepSpec {
    std::vector<double> grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<std::string> suites = {"untargeted", "targeted"};
    int adv_pool_limit = 120;
    int eval_count = 80;
    int duplicates = 6;
};

struct ExperimentConfig {
    std::uint64_t seed = 7;
    std::string out_dir = "runs/out";
    DatasetSpec dataset;
    nn::TrainConfig model_train{8, 32, 0.08, 0.9, 1, 0.999};
    nn::TrainConfig detector_train{6, 32, 0.05, 0.9, 2, 0.999};
    nn::TrainConfig fine_tune{3, 32, 0.01, 0.9, 3, 1.01};
    std::vector<attacks::AttackConfig> attack_list; // empty -> full default suite
    RectifierSpec rectifier;
    WhiteboxSpec whitebox;
    AlphaSweepSpec alpha_sweep;
};

ExperimentConfig default_config();
ExperimentConfig load_config(const std::string& path);
std::string config_hash(const ExperimentConfig& config);

/// "fgsm-u", "pgd-t", ... (kind name plus mode suffix)
std::string attack_label(const attacks::AttackConfig& config);
attacks::AttackConfig attack_from_label(const std::string& label);
std::vector<attacks::AttackConfig> default_attack_suite();

/// A pipeline stage failure; carries the stage name in the message.
struct StageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- report rows ------------------------------------------------------------

struct AucRow {
    std::string attack;
    int n_adv = 0;
    double det_org = 0.0, det_is = 0.0, ensemble = 0.0;
};

struct AccuracyRow {
    std::string attack; // "clean" for the unattacked row
    int n = 0;
    double success_rate = 0.0;
    double base_acc_all = 0.0;      // base model vs ground truth, all examples
    double base_acc_success = 0.0;  // ... over successful attacks only
    double gcd_acc_all = 0.0;       // gcd_predict vs ground truth
    double gcd_acc_success = 0.0;
};

struct PerturbationRow {
    std::string attack;
    int n = 0, successes = 0;
    double success_rate = 0.0;
    double mean_l2 = 0.0, median_l2 = 0.0, mean_linf = 0.0, median_linf = 0.0;
};

struct SeparationRow {
    std::string attack;
    double median_clean = 0.0, median_adv = 0.0, ratio = 0.0, overlap = 0.0;
};

struct RemovalRow {
    std::string attack;
    double percent = 0.0;
    double success_rate = 0.0;
};

struct WhiteboxRow {
    std::string attack;
    bool defended = false; // false: grey-box baseline (success = fools base)
    double beta = 0.0;
    int n = 0;
    double success_rate = 0.0;
    double mean_l2_success = 0.0;
};

struct AlphaRow {
    std::string suite;
    double alpha = 0.0;
    double recovered_accuracy = 0.0;
    int n = 0;
};

struct ReportBundle {
    double clean_base_accuracy = 0.0;
    double clean_gcd_accuracy = 0.0;
    double rectifier_clean_accuracy = 0.0;
    std::vector<AucRow> auc_table;
    std::vector<AccuracyRow> accuracy_table;
    std::vector<PerturbationRow> perturbation_table;
    std::vector<SeparationRow> separation_table;
    std::vector<RemovalRow> removal_table;
    std::string out_dir;
};

struct WhiteboxBundle {
    std::vector<WhiteboxRow> rows;
    std::string out_dir;
};

struct AlphaSweepBundle {
    std::vector<AlphaRow> rows;
    std::string out_dir;
};

// ---- pipeline entry points --------------------------------------------------

/// Full grey-box evaluation: trains or loads the base model, runs the attack
/// matrix, trains the detector pair, builds the rectifier, and writes
/// records_greybox.jsonl plus the CSV tables into config.out_dir.
ReportBundle run_greybox_eval(const ExperimentConfig& config);

/// Combined-loss attacks over the beta grid against the grey-box artifacts.
WhiteboxBundle run_whitebox_eval(const ExperimentConfig& config);

/// Recovered accuracy as a function of the masking rate.
AlphaSweepBundle run_alpha_sweep(const ExperimentConfig& config,
                                 const std::vector<double>& grid_override = {});

/// Rebuilds every CSV table from the records_*.jsonl files in out_dir.
void regenerate_reports(const std::string& out_dir);

// Standalone stages used by the narrower CLI subcommands.
nn::Classifier ensure_base_model(const ExperimentConfig& config, bool* trained_fresh = nullptr);
void run_train(const ExperimentConfig& config);
void run_attack_stage(const ExperimentConfig& config);
void run_detect_train(const ExperimentConfig& config);

} // namespace gcd::harness

#endif
