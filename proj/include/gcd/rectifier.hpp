#ifndef GCD_RECTIFIER_HPP
#define GCD_RECTIFIER_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "gcd/attacks.hpp"
#include "gcd/detectors.hpp"
#include "gcd/nn.hpp"

namespace gcd::rectifier {

/// Which pixels the stochastic suppression of a flagged input may touch.
/// Pixel p is suspect iff saliency[p] > alpha*(g_max - g_min) + g_min.
struct MaskPlan {
    double alpha = 0.5;
    double g_max = 0.0;
    double g_min = 0.0;
    double threshold = 0.0;
    std::vector<std::uint8_t> suspect;
    int suspect_count = 0;
    bool degenerate = false; // constant saliency map, no suspects
    double bernoulli_p = 0.5;
    double mu = 0.0;    // pixel mean of the image
    double sigma = 0.0; // pixel std of the image
};

/// Saliency of the ensemble's selected branch: |∂L_det/∂(branch input)| with
/// L_det the cross entropy toward the adversarial class. For the org branch
/// the input is the image itself; for the is branch it is the gradient map,
/// whose pixels align one-to-one with the image.
std::vector<double> detector_saliency(const detectors::DetectorEnsemble& ensemble,
                                      const std::vector<double>& x,
                                      detectors::Source* branch_out = nullptr);

/// Saliency of one specific branch net over its own input view.
std::vector<double> branch_saliency(const nn::Classifier& detector_net,
                                    const std::vector<double>& branch_input);

MaskPlan build_mask(const std::vector<double>& saliency, const std::vector<double>& image,
                    double alpha, double bernoulli_p);

/// Suspect pixels are independently kept (u=0) or replaced (u=1) by a draw
/// from Normal(mu, sigma) clipped into [0,1]; everything else is untouched.
std::vector<double> apply_mask(const std::vector<double>& image, const MaskPlan& plan,
                               std::uint64_t seed);

struct RemovalRow {
    double percent = 0.0;
    double success_rate = 0.0;
};

/// Zeroes the top-k% saliency pixels of already-successful adversarial
/// examples and re-measures how many still fool the base model. Always
/// includes the 0% baseline row. still_fooled, when given, receives the
/// per-example outcomes (one vector per returned row).
std::vector<RemovalRow> saliency_removal_experiment(
    const nn::Classifier& model, const detectors::DetectorEnsemble& ensemble,
    const std::vector<attacks::AdversarialExample>& adv, std::span<const double> percents,
    std::vector<std::vector<std::uint8_t>>* still_fooled = nullptr);

struct LabeledAdversarial {
    std::vector<double> perturbed;
    int true_label = -1; // ground-truth class of the clean original
};

/// Fine-tunes a copy of the base model on `duplicates` randomized masked
/// variants of each adversarial example, labeled with the clean true label.
nn::Classifier build_rectifier(const nn::Classifier& base,
                               const detectors::DetectorEnsemble& ensemble,
                               const std::vector<LabeledAdversarial>& adv_set, double alpha,
                               int duplicates, double bernoulli_p,
                               const nn::TrainConfig& fine_tune_config, std::uint64_t seed);

struct GcdVerdict {
    detectors::DetectorVerdict detector;
    int label = -1;
    enum class Route { BaseModel, Rectifier } route = Route::BaseModel;
};

/// The full pipeline for one input: benign verdicts route to the base model
/// untouched; adversarial verdicts mask the input with the selected branch's
/// saliency and route to the rectifier.
GcdVerdict gcd_predict(const nn::Classifier& base, const detectors::DetectorEnsemble& ensemble,
                       const nn::Classifier& rectifier, const std::vector<double>& x, double alpha,
                       double bernoulli_p, std::uint64_t seed);

} // namespace gcd::rectifier

#endif
