#ifndef GCD_NN_HPP
#define GCD_NN_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gcd/tensor.hpp"

namespace gcd::data {
struct Dataset;
}

namespace gcd::nn {

struct Conv2dLayer {
    TensorPtr kernels; // F×C×kH×kW
    TensorPtr bias;    // F
    int stride = 1;
    int pad = 0;
};

struct DenseLayer {
    TensorPtr weight;        // out×in, row i is w_i
    TensorPtr bias;          // out; may be null (bias-free layer)
};

struct ReluLayer {};
struct MaxPool2x2Layer {};
struct FlattenLayer {};

using Layer = std::variant<Conv2dLayer, ReluLayer, MaxPool2x2Layer, FlattenLayer, DenseLayer>;

/// A classifier decomposed as representation g (the feature layers), a final
/// fully connected layer producing logits a_i = w_i·z (+ bias), and a softmax
/// read-out. z, the logits tensor and the FC rows stay accessible.
class Classifier {
public:
    std::vector<Layer> features;
    DenseLayer fc;
    Shape input_shape;
    int num_classes = 0;

    struct Forward {
        TensorPtr input;  // the tensor x fed to the net
        TensorPtr z;      // representation g(x)
        TensorPtr logits; // a = W z (+ b)
    };

    /// Runs the net over a C×H×W (or flat) input tensor, building a tape when
    /// anything on the path requires gradients.
    Forward forward(const TensorPtr& x) const;
    Forward forward(const std::vector<double>& x, bool input_grad = false) const;

    std::vector<double> logits_of(const std::vector<double>& x) const;
    std::vector<double> probabilities(const std::vector<double>& x) const;
    int predict(const std::vector<double>& x) const;

    /// All parameter tensors in a stable order.
    std::vector<TensorPtr> parameters() const;
    /// Toggles requires_grad on every parameter. Frozen classifiers are safe
    /// to share across threads; training requires trainable + single thread.
    void set_trainable(bool trainable);
    bool trainable() const;

    /// Deep copy with fresh parameter tensors.
    Classifier clone() const;

    /// Row w_i of the final FC layer.
    std::vector<double> fc_row(int i) const;

    int64_t input_size() const { return numel(input_shape); }
};

/// conv(8,3×3,pad1)-relu-pool | conv(16,3×3,pad1)-relu-pool | flatten |
/// dense(64)-relu | FC(num_classes). Initialization is He-normal per seed.
Classifier build_small_cnn(const Shape& input_shape, int num_classes, std::uint64_t seed);

/// 2-input, 2-class net with one hidden dense layer of width 4 (relu).
/// The FC layer is bias-free so the logit gap equals (w_m-w_n)·z exactly.
Classifier build_toy_net(std::uint64_t seed);

struct TrainConfig {
    int epochs = 10;
    int batch_size = 32;
    double lr = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 1;
    double early_stop_accuracy = 1.01; // > 1 disables early stopping
};

struct EpochStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainLog {
    std::vector<EpochStats> epochs;
};

/// Minibatch SGD on softmax cross entropy. Deterministic under config.seed.
/// Throws TrainingError naming the epoch if the loss goes non-finite.
TrainLog train(Classifier& model, const data::Dataset& dataset, const TrainConfig& config);

/// Trains a copy; the source model is untouched.
std::pair<Classifier, TrainLog> fine_tune(const Classifier& model, const data::Dataset& dataset,
                                          const TrainConfig& config);

double accuracy(const Classifier& model, const data::Dataset& dataset);

// Checkpoint container: "GCDCKPT1" magic, little-endian u32 JSON header
// length, JSON header (version, role, architecture, tensor table), then raw
// little-endian float64 blobs in table order.
void save_checkpoint(const Classifier& model, const std::string& path,
                     const std::string& role = "base");
Classifier load_checkpoint(const std::string& path, std::string* role_out = nullptr);

} // namespace gcd::nn

#endif
