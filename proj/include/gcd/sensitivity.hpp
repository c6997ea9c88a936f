#ifndef GCD_SENSITIVITY_HPP
#define GCD_SENSITIVITY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gcd/data.hpp"
#include "gcd/nn.hpp"

namespace gcd::sensitivity {

/// Input sensitivity of one example: the gradient of the model's cross
/// entropy at its own predicted label, taken with respect to the input.
struct SensitivityRecord {
    int input_id = -1;
    int predicted = -1;
    double insen = 0.0;                 // L2 norm of gradient_map
    std::vector<double> gradient_map;   // ∂L/∂x, input-shaped
    double dist_z = 0.0;                // representation-space boundary distance
};

SensitivityRecord input_sensitivity(const nn::Classifier& model, const std::vector<double>& x,
                                    int input_id = -1);

/// The gradient map G(x, ŷ) alone (used as the DET_IS input).
std::vector<double> gradient_map(const nn::Classifier& model, const std::vector<double>& x);

/// |(w_m - w_n)·g(x)| / ||w_m - w_n||. Throws ContractError on m == n or
/// out-of-range classes, NumericError when the hyperplane is degenerate.
double dist_z(const nn::Classifier& model, const std::vector<double>& x, int m, int n);

/// Per-logit input gradients ∂a_i/∂x, one backward sweep per class.
std::vector<std::vector<double>> logit_input_gradients(const nn::Classifier& model,
                                                       const std::vector<double>& x);

/// Chain-rule expansion of the input gradient around the predicted class m
/// and runner-up n:
///   ∂L/∂x = C1 / (exp(a_m - a_n) + Σ_{q≠m} exp(a_q - a_n))
///         + Σ_{p≠m,n} C2_p / Σ_q exp(a_q - a_p)
/// with C1 = ∂a_n/∂x - ∂a_m/∂x and C2_p = ∂a_p/∂x - ∂a_m/∂x. term_i is the
/// bias-free logit gap (w_m - w_n)·z that ties the leading denominator to
/// the boundary distance.
struct AnalyticSensitivityTerms {
    int m = -1;
    int n = -1;
    double term_i = 0.0;
    std::vector<double> c1;
    std::vector<std::vector<double>> c2; // one entry per class p ∉ {m, n}
    std::vector<double> reconstructed;   // must match autodiff ∂L/∂x
};

AnalyticSensitivityTerms analytic_gradient_expansion(const nn::Classifier& model,
                                                     const std::vector<double>& x);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Histogram overlap of two samples (64 shared bins); 1.0 for identical sets.
double overlap_coefficient(const std::vector<double>& a, const std::vector<double>& b);

struct ToyStudyReport {
    double spearman_dist_insen = 0.0;
    double min_dist_z = 0.0;
    double insen_at_min_dist = 0.0;
    double insen_top_decile = 0.0; // 90th percentile over the grid
    double toy_accuracy = 0.0;
    int grid_rows = 0;
    // grid points whose representation is exactly zero (every hidden unit
    // dead): they sit on the z-space hyperplane with zero input gradient, so
    // the distance/sensitivity relation is undefined there
    int degenerate_points = 0;
};

/// Trains the toy net, sweeps a 100×100 input grid, writes one CSV row per
/// grid point and training point, and reports Spearman(dist_z, insen).
ToyStudyReport toy_boundary_study(std::uint64_t seed, const std::string& csv_path);

struct SeparationReport {
    double median_clean = 0.0;
    double median_adv = 0.0;
    double median_ratio = 0.0;      // adv / clean
    double overlap_coefficient = 0.0;
    std::vector<double> insen_clean;
    std::vector<double> insen_adv;
};

/// InSen distributions of a clean set vs a perturbed set; optional CSV with
/// one row per example.
SeparationReport sensitivity_separation_study(const nn::Classifier& model,
                                              const std::vector<std::vector<double>>& clean,
                                              const std::vector<std::vector<double>>& adv,
                                              const std::string& csv_path = "");

} // namespace gcd::sensitivity

#endif
