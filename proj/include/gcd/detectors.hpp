#ifndef GCD_DETECTORS_HPP
#define GCD_DETECTORS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gcd/attacks.hpp"
#include "gcd/data.hpp"
#include "gcd/nn.hpp"

namespace gcd::detectors {

// Binary detector label convention: one-hot (1,0) = benign, (0,1) = adversarial.
inline constexpr int kBenignClass = 0;
inline constexpr int kAdversarialClass = 1;

struct DetectorSample {
    std::vector<double> input; // raw image (org view) or gradient map (is view)
    int label = kBenignClass;
};

enum class Source { Org, Is, Forced };
std::string source_name(Source source);

struct DetectorVerdict {
    double p_benign = 0.0;
    double p_adversarial = 0.0;
    double entropy_bits = 0.0;
    Source source = Source::Forced;

    bool is_benign() const { return p_benign >= p_adversarial; }
};

/// Binary entropy in bits with the 0·log0 := 0 convention. Probabilities are
/// floored at 1e-12 inside the logs.
double entropy(double p_benign, double p_adversarial);

DetectorVerdict make_verdict(double p_benign, double p_adversarial, Source source);

/// Entropy gating: the lower-entropy verdict wins; an exact tie goes to the
/// sensitivity branch. The output is one of the inputs verbatim.
DetectorVerdict ensemble_verdict(const DetectorVerdict& org, const DetectorVerdict& is);

/// Rank-based (Mann-Whitney) AUC of adversarial-score separation; ties count
/// one half. Scores are p_adversarial; benign examples are the negatives.
double auc(const std::vector<double>& scores_benign, const std::vector<double>& scores_adversarial);

/// One sub-detector: the small CNN with two outputs over an image-shaped view.
class Detector {
public:
    Detector() = default;
    static Detector create(const Shape& input_shape, Source role, std::uint64_t seed);
    static Detector from_classifier(nn::Classifier net, Source role);

    nn::TrainLog fit(const std::vector<DetectorSample>& samples, const nn::TrainConfig& config);

    /// Verdict over this branch's own input view. Throws StateError if the
    /// detector has not been trained or loaded.
    DetectorVerdict verdict(const std::vector<double>& branch_input) const;

    bool trained() const { return trained_; }
    const nn::Classifier& net() const;
    Source role = Source::Forced;

    void save(const std::string& path) const;
    static Detector load(const std::string& path);

private:
    nn::Classifier net_;
    bool trained_ = false;
};

struct DetectorDataset {
    std::vector<DetectorSample> org_view; // raw pixels
    std::vector<DetectorSample> is_view;  // gradient maps, same order/labels

    // Every successful attack with its provenance, before balancing; feeds
    // the rectifier's fine-tuning pool.
    struct AdversarialRecord {
        std::vector<double> perturbed;
        int true_label = -1;  // ground truth of the clean original
        int label_clean = -1; // the model's clean prediction
        std::string attack;
    };
    std::vector<AdversarialRecord> adv_pool;
};

/// Eq.-(8)-style paired dataset: every clean example contributes a benign
/// sample, every successful grey-box attack contributes an adversarial one;
/// the larger class is subsampled to an exact balance. The is-view replaces
/// each input with G(x, ŷ) from the protected model.
DetectorDataset build_detector_dataset(const nn::Classifier& model, const data::Dataset& clean,
                                       const std::vector<attacks::AttackConfig>& attack_configs,
                                       std::uint64_t seed);

/// The trained pair plus the protected model, gated by entropy.
struct DetectorEnsemble {
    Detector org;
    Detector is;
    const nn::Classifier* base = nullptr;

    /// G(x, ŷ): input gradient of the base model's cross entropy at its own
    /// predicted label (the DET_IS input view).
    std::vector<double> gradient_map_of(const std::vector<double>& x) const;

    DetectorVerdict verdict_org(const std::vector<double>& x) const;
    DetectorVerdict verdict_is(const std::vector<double>& x) const;
    DetectorVerdict verdict(const std::vector<double>& x) const;
};

} // namespace gcd::detectors

#endif
