#ifndef GCD_ATTACKS_HPP
#define GCD_ATTACKS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gcd/data.hpp"
#include "gcd/nn.hpp"

namespace gcd::detectors {
struct DetectorEnsemble;
}

namespace gcd::attacks {

enum class Kind { Fgsm, Pgd, DeepFool, CwL2, Ddn };
enum class Mode { Untargeted, Targeted };

std::string kind_name(Kind kind);
Kind kind_from_name(const std::string& name);

struct AttackConfig {
    Kind kind = Kind::Fgsm;
    Mode mode = Mode::Untargeted;
    int target_class = -1; // < 0: least-likely class of the clean prediction

    double epsilon = 0.3;   // L∞ budget (FGSM/PGD)
    int steps = 40;         // PGD/DDN iteration count
    double step_size = 0.02;
    bool random_start = true; // PGD

    int deepfool_max_steps = 50;
    double overshoot = 1.02;

    double cw_confidence = 0.0;
    int cw_c_search_steps = 6;
    int cw_inner_steps = 200;
    double cw_lr = 0.05;

    double ddn_gamma = 0.05;
    double ddn_init_norm = 1.0;

    double beta = 0.0; // detector-loss weight for the white-box combined loss
    std::uint64_t seed = 0;
};

struct AdversarialExample {
    std::vector<double> clean;
    std::vector<double> perturbed;
    int label_clean = -1; // ŷ_true: the model's prediction on the clean input
    int label_adv = -1;   // ŷ' on the perturbed input
    int target = -1;      // targeted mode only
    double l2 = 0.0;
    double linf = 0.0;
    bool success = false;
    int iterations = 0;
    bool evaded_detector = false; // white-box runs only
};

// Single-example attacks. original_label < 0 recomputes ŷ_true from the model.
AdversarialExample fgsm(const nn::Classifier& model, const std::vector<double>& x,
                        const AttackConfig& config, int original_label = -1);
AdversarialExample pgd(const nn::Classifier& model, const std::vector<double>& x,
                       const AttackConfig& config, int original_label = -1);
AdversarialExample deepfool(const nn::Classifier& model, const std::vector<double>& x,
                            const AttackConfig& config, int original_label = -1);
AdversarialExample cw_l2(const nn::Classifier& model, const std::vector<double>& x,
                         const AttackConfig& config, int original_label = -1);
AdversarialExample ddn(const nn::Classifier& model, const std::vector<double>& x,
                       const AttackConfig& config, int original_label = -1);

AdversarialExample run_attack(const nn::Classifier& model, const std::vector<double>& x,
                              const AttackConfig& config, int original_label = -1);

/// Runs the configured base attack but follows the gradient of the combined
/// loss L_adv + beta * L_det, where L_det drives both sub-detectors toward
/// the benign class. Success additionally requires the ensemble to call the
/// result benign. beta == 0 reduces bit-exactly to the grey-box attack.
AdversarialExample whitebox_wrap(const nn::Classifier& model,
                                 const detectors::DetectorEnsemble& ensemble,
                                 const std::vector<double>& x, const AttackConfig& config,
                                 int original_label = -1);

struct BatchStats {
    int total = 0;
    int successes = 0;
    double success_rate = 0.0;
    bool empty_input = false;
    // Norm statistics over successful examples.
    double mean_l2 = 0.0, median_l2 = 0.0;
    double mean_linf = 0.0, median_linf = 0.0;
};

struct AdversarialBatch {
    std::vector<AdversarialExample> examples;
    BatchStats stats;
};

BatchStats summarize(const std::vector<AdversarialExample>& examples);

/// Per-example attacks in parallel; example i uses seed derive_seed(config.seed, i).
AdversarialBatch attack_batch(const nn::Classifier& model, const data::Dataset& dataset,
                              const AttackConfig& config);
AdversarialBatch whitebox_attack_batch(const nn::Classifier& model,
                                       const detectors::DetectorEnsemble& ensemble,
                                       const data::Dataset& dataset, const AttackConfig& config);

} // namespace gcd::attacks

#endif
