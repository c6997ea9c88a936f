#include "gcd/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "gcd/data.hpp"
#include "gcd/errors.hpp"
#include "gcd/rng.hpp"

namespace gcd::nn {

using json = nlohmann::json;

namespace {

TensorPtr he_normal(Shape shape, double fan_in, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    auto n = numel(shape);
    std::vector<double> d(static_cast<size_t>(n));
    for (auto& v : d) v = dist(rng);
    return Tensor::make(std::move(shape), std::move(d), true);
}

TensorPtr apply_dense(const DenseLayer& layer, const TensorPtr& x) {
    const int in = layer.weight->shape[1];
    const int out = layer.weight->shape[0];
    if (x->size() != in)
        throw DimensionError("dense layer expects " + std::to_string(in) + " inputs, got " +
                             shape_str(x->shape));
    auto col = reshape(x, {in, 1});
    auto y = matmul(layer.weight, col);
    auto flat = reshape(y, {out});
    if (layer.bias) flat = add(flat, layer.bias);
    return flat;
}

} // namespace

Classifier::Forward Classifier::forward(const TensorPtr& x) const {
    TensorPtr t = x;
    for (const auto& layer : features) {
        t = std::visit(
            [&](const auto& l) -> TensorPtr {
                using L = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<L, Conv2dLayer>)
                    return bias_add_channel(conv2d(t, l.kernels, l.stride, l.pad), l.bias);
                else if constexpr (std::is_same_v<L, ReluLayer>)
                    return relu(t);
                else if constexpr (std::is_same_v<L, MaxPool2x2Layer>)
                    return maxpool2x2(t);
                else if constexpr (std::is_same_v<L, FlattenLayer>)
                    return reshape(t, {static_cast<int>(t->size())});
                else
                    return apply_dense(l, t);
            },
            layer);
    }
    Forward f;
    f.input = x;
    f.z = t;
    f.logits = apply_dense(fc, t);
    return f;
}

Classifier::Forward Classifier::forward(const std::vector<double>& x, bool input_grad) const {
    if (static_cast<std::int64_t>(x.size()) != input_size())
        throw DimensionError("input has " + std::to_string(x.size()) + " values, model expects " +
                             shape_str(input_shape));
    auto t = Tensor::make(input_shape, x, input_grad);
    return forward(t);
}

std::vector<double> Classifier::logits_of(const std::vector<double>& x) const {
    return forward(x).logits->data;
}

std::vector<double> Classifier::probabilities(const std::vector<double>& x) const {
    return softmax(logits_of(x));
}

int Classifier::predict(const std::vector<double>& x) const {
    auto l = logits_of(x);
    return static_cast<int>(std::max_element(l.begin(), l.end()) - l.begin());
}

std::vector<TensorPtr> Classifier::parameters() const {
    std::vector<TensorPtr> out;
    for (const auto& layer : features) {
        if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
            out.push_back(c->kernels);
            out.push_back(c->bias);
        } else if (const auto* d = std::get_if<DenseLayer>(&layer)) {
            out.push_back(d->weight);
            if (d->bias) out.push_back(d->bias);
        }
    }
    out.push_back(fc.weight);
    if (fc.bias) out.push_back(fc.bias);
    return out;
}

void Classifier::set_trainable(bool trainable) {
    for (auto& p : parameters()) {
        p->requires_grad = trainable;
        if (!trainable) p->grad.clear();
    }
}

bool Classifier::trainable() const {
    return fc.weight->requires_grad;
}

Classifier Classifier::clone() const {
    Classifier out;
    out.input_shape = input_shape;
    out.num_classes = num_classes;
    auto copy_tensor = [](const TensorPtr& t) -> TensorPtr {
        if (!t) return nullptr;
        return Tensor::make(t->shape, t->data, t->requires_grad);
    };
    for (const auto& layer : features) {
        if (const auto* c = std::get_if<Conv2dLayer>(&layer))
            out.features.push_back(Conv2dLayer{copy_tensor(c->kernels), copy_tensor(c->bias), c->stride, c->pad});
        else if (const auto* d = std::get_if<DenseLayer>(&layer))
            out.features.push_back(DenseLayer{copy_tensor(d->weight), copy_tensor(d->bias)});
        else
            out.features.push_back(layer);
    }
    out.fc = DenseLayer{copy_tensor(fc.weight), copy_tensor(fc.bias)};
    return out;
}

std::vector<double> Classifier::fc_row(int i) const {
    if (i < 0 || i >= num_classes) throw IndexError("fc_row: class " + std::to_string(i) + " out of range");
    const int in = fc.weight->shape[1];
    return std::vector<double>(fc.weight->data.begin() + static_cast<long>(i) * in,
                               fc.weight->data.begin() + static_cast<long>(i + 1) * in);
}

Classifier build_small_cnn(const Shape& input_shape, int num_classes, std::uint64_t seed) {
    if (input_shape.size() != 3) throw ConfigError("build_small_cnn expects a C×H×W input shape");
    if (num_classes < 2) throw ConfigError("build_small_cnn needs at least 2 classes");
    const int C = input_shape[0], H = input_shape[1], W = input_shape[2];
    if (H % 4 != 0 || W % 4 != 0)
        throw ConfigError("build_small_cnn: spatial dims must be divisible by 4, got " + shape_str(input_shape));
    auto rng = make_engine(seed);

    Classifier m;
    m.input_shape = input_shape;
    m.num_classes = num_classes;

    m.features.push_back(Conv2dLayer{he_normal({8, C, 3, 3}, C * 9.0, rng), Tensor::zeros({8}, true), 1, 1});
    m.features.push_back(ReluLayer{});
    m.features.push_back(MaxPool2x2Layer{});
    m.features.push_back(Conv2dLayer{he_normal({16, 8, 3, 3}, 8 * 9.0, rng), Tensor::zeros({16}, true), 1, 1});
    m.features.push_back(ReluLayer{});
    m.features.push_back(MaxPool2x2Layer{});
    m.features.push_back(FlattenLayer{});
    const int flat = 16 * (H / 4) * (W / 4);
    m.features.push_back(DenseLayer{he_normal({64, flat}, flat, rng), Tensor::zeros({64}, true)});
    m.features.push_back(ReluLayer{});
    m.fc = DenseLayer{he_normal({num_classes, 64}, 64.0, rng), Tensor::zeros({num_classes}, true)};
    return m;
}

Classifier build_toy_net(std::uint64_t seed) {
    auto rng = make_engine(seed);
    Classifier m;
    m.input_shape = {2};
    m.num_classes = 2;
    m.features.push_back(DenseLayer{he_normal({4, 2}, 2.0, rng), Tensor::zeros({4}, true)});
    m.features.push_back(ReluLayer{});
    m.fc = DenseLayer{he_normal({2, 4}, 4.0, rng), nullptr};
    return m;
}

TrainLog train(Classifier& model, const data::Dataset& dataset, const TrainConfig& config) {
    if (dataset.items.empty()) throw ContractError("train: dataset is empty");
    if (config.epochs < 1 || config.batch_size < 1 || config.lr < 0.0)
        throw ConfigError("train: epochs/batch_size must be >= 1 and lr >= 0");
    for (const auto& ex : dataset.items)
        if (ex.label < 0 || ex.label >= model.num_classes)
            throw IndexError("train: label " + std::to_string(ex.label) + " outside " +
                             std::to_string(model.num_classes) + " classes");

    model.set_trainable(true);
    auto params = model.parameters();
    std::vector<std::vector<double>> velocity;
    auto rng = make_engine(derive_seed(config.seed, 1));
    std::vector<size_t> idx(dataset.items.size());
    std::iota(idx.begin(), idx.end(), 0);

    TrainLog log;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(idx.begin(), idx.end(), rng);
        double loss_sum = 0.0;
        std::int64_t correct = 0;
        for (size_t start = 0; start < idx.size(); start += static_cast<size_t>(config.batch_size)) {
            const size_t end = std::min(idx.size(), start + static_cast<size_t>(config.batch_size));
            for (auto& p : params) p->zero_grad();
            for (size_t i = start; i < end; ++i) {
                const auto& ex = dataset.items[idx[i]];
                auto f = model.forward(ex.x, false);
                auto loss = softmax_cross_entropy(f.logits, ex.label);
                if (!std::isfinite(loss->item()))
                    throw TrainingError("training diverged at epoch " + std::to_string(epoch + 1));
                loss_sum += loss->item();
                const auto& lg = f.logits->data;
                if (static_cast<int>(std::max_element(lg.begin(), lg.end()) - lg.begin()) == ex.label)
                    ++correct;
                backward(loss);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (auto& p : params)
                for (auto& g : p->grad) g *= inv;
            if (config.lr > 0.0) sgd_step(params, config.lr, config.momentum, velocity);
        }
        EpochStats stats;
        stats.loss = loss_sum / static_cast<double>(idx.size());
        stats.accuracy = static_cast<double>(correct) / static_cast<double>(idx.size());
        log.epochs.push_back(stats);
        if (stats.accuracy >= config.early_stop_accuracy) break;
    }
    return log;
}

std::pair<Classifier, TrainLog> fine_tune(const Classifier& model, const data::Dataset& dataset,
                                          const TrainConfig& config) {
    Classifier copy = model.clone();
    TrainLog log = train(copy, dataset, config);
    return {std::move(copy), std::move(log)};
}

double accuracy(const Classifier& model, const data::Dataset& dataset) {
    if (dataset.items.empty()) return 0.0;
    std::int64_t correct = 0;
    const auto n = static_cast<std::int64_t>(dataset.items.size());
#pragma omp parallel for schedule(dynamic) reduction(+ : correct)
    for (std::int64_t i = 0; i < n; ++i)
        if (model.predict(dataset.items[static_cast<size_t>(i)].x) ==
            dataset.items[static_cast<size_t>(i)].label)
            ++correct;
    return static_cast<double>(correct) / static_cast<double>(n);
}

// ---- checkpoints ------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'G', 'C', 'D', 'C', 'K', 'P', 'T', '1'};
constexpr int kFormatVersion = 1;

struct NamedTensor {
    std::string name;
    TensorPtr tensor;
};

std::vector<NamedTensor> named_tensors(const Classifier& m) {
    std::vector<NamedTensor> out;
    for (size_t i = 0; i < m.features.size(); ++i) {
        const auto& layer = m.features[i];
        if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
            out.push_back({"features." + std::to_string(i) + ".kernels", c->kernels});
            out.push_back({"features." + std::to_string(i) + ".bias", c->bias});
        } else if (const auto* d = std::get_if<DenseLayer>(&layer)) {
            out.push_back({"features." + std::to_string(i) + ".weight", d->weight});
            if (d->bias) out.push_back({"features." + std::to_string(i) + ".bias", d->bias});
        }
    }
    out.push_back({"fc.weight", m.fc.weight});
    if (m.fc.bias) out.push_back({"fc.bias", m.fc.bias});
    return out;
}

json architecture_json(const Classifier& m) {
    json layers = json::array();
    for (const auto& layer : m.features) {
        if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
            layers.push_back({{"kind", "conv2d"},
                              {"filters", c->kernels->shape[0]},
                              {"in_channels", c->kernels->shape[1]},
                              {"kernel", {c->kernels->shape[2], c->kernels->shape[3]}},
                              {"stride", c->stride},
                              {"pad", c->pad}});
        } else if (std::get_if<ReluLayer>(&layer)) {
            layers.push_back({{"kind", "relu"}});
        } else if (std::get_if<MaxPool2x2Layer>(&layer)) {
            layers.push_back({{"kind", "maxpool2x2"}});
        } else if (std::get_if<FlattenLayer>(&layer)) {
            layers.push_back({{"kind", "flatten"}});
        } else if (const auto* d = std::get_if<DenseLayer>(&layer)) {
            layers.push_back({{"kind", "dense"},
                              {"out", d->weight->shape[0]},
                              {"in", d->weight->shape[1]},
                              {"bias", d->bias != nullptr}});
        }
    }
    return layers;
}

Classifier from_architecture(const json& header) {
    Classifier m;
    m.input_shape = header.at("input_shape").get<Shape>();
    m.num_classes = header.at("num_classes").get<int>();
    for (const auto& l : header.at("layers")) {
        const std::string kind = l.at("kind").get<std::string>();
        if (kind == "conv2d") {
            const int f = l.at("filters").get<int>();
            const int c = l.at("in_channels").get<int>();
            const auto k = l.at("kernel");
            m.features.push_back(Conv2dLayer{Tensor::zeros({f, c, k.at(0).get<int>(), k.at(1).get<int>()}, true),
                                             Tensor::zeros({f}, true), l.at("stride").get<int>(),
                                             l.at("pad").get<int>()});
        } else if (kind == "relu") {
            m.features.push_back(ReluLayer{});
        } else if (kind == "maxpool2x2") {
            m.features.push_back(MaxPool2x2Layer{});
        } else if (kind == "flatten") {
            m.features.push_back(FlattenLayer{});
        } else if (kind == "dense") {
            const int out = l.at("out").get<int>(), in = l.at("in").get<int>();
            m.features.push_back(DenseLayer{Tensor::zeros({out, in}, true),
                                            l.at("bias").get<bool>() ? Tensor::zeros({out}, true) : nullptr});
        } else {
            throw ParseError("checkpoint: unknown layer kind '" + kind + "'");
        }
    }
    const auto& f = header.at("fc");
    const int out = f.at("out").get<int>(), in = f.at("in").get<int>();
    m.fc = DenseLayer{Tensor::zeros({out, in}, true),
                      f.at("bias").get<bool>() ? Tensor::zeros({out}, true) : nullptr};
    return m;
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw ParseError("checkpoint: truncated header length");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

void save_checkpoint(const Classifier& model, const std::string& path, const std::string& role) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("checkpoint: cannot open '" + path + "' for writing");

    json header;
    header["format_version"] = kFormatVersion;
    header["role"] = role;
    header["input_shape"] = model.input_shape;
    header["num_classes"] = model.num_classes;
    header["layers"] = architecture_json(model);
    header["fc"] = {{"out", model.fc.weight->shape[0]},
                    {"in", model.fc.weight->shape[1]},
                    {"bias", model.fc.bias != nullptr}};
    json table = json::array();
    auto tensors = named_tensors(model);
    for (const auto& nt : tensors) table.push_back({{"name", nt.name}, {"shape", nt.tensor->shape}});
    header["tensors"] = table;

    const std::string hs = header.dump();
    os.write(kMagic, sizeof(kMagic));
    write_u32_le(os, static_cast<std::uint32_t>(hs.size()));
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& nt : tensors) {
        static_assert(sizeof(double) == 8);
        os.write(reinterpret_cast<const char*>(nt.tensor->data.data()),
                 static_cast<std::streamsize>(nt.tensor->data.size() * sizeof(double)));
    }
    if (!os) throw ParseError("checkpoint: write to '" + path + "' failed");
}

Classifier load_checkpoint(const std::string& path, std::string* role_out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("checkpoint: cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ParseError("checkpoint: bad magic in '" + path + "' (expected GCDCKPT1)");
    const auto header_len = read_u32_le(is);
    std::string hs(header_len, '\0');
    is.read(hs.data(), header_len);
    if (!is) throw ParseError("checkpoint: truncated header");
    json header;
    try {
        header = json::parse(hs);
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint: malformed header JSON: ") + e.what());
    }
    const int version = header.at("format_version").get<int>();
    if (version != kFormatVersion)
        throw ParseError("checkpoint: unsupported format version " + std::to_string(version));
    if (role_out) *role_out = header.at("role").get<std::string>();

    Classifier m = from_architecture(header);
    auto tensors = named_tensors(m);
    const auto& table = header.at("tensors");
    if (table.size() != tensors.size())
        throw ParseError("checkpoint: tensor table lists " + std::to_string(table.size()) +
                         " entries, architecture expects " + std::to_string(tensors.size()));
    for (size_t i = 0; i < tensors.size(); ++i) {
        const auto shape = table.at(i).at("shape").get<Shape>();
        if (shape != tensors[i].tensor->shape)
            throw ParseError("checkpoint: shape mismatch for " + tensors[i].name + ": file has " +
                             shape_str(shape) + ", architecture has " + shape_str(tensors[i].tensor->shape));
        auto& dst = tensors[i].tensor->data;
        is.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(dst.size() * sizeof(double)));
        if (!is) throw ParseError("checkpoint: truncated blob for " + tensors[i].name);
    }
    return m;
}

} // namespace gcd::nn
