#ifndef GCD_DATA_HPP
#define GCD_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gcd/tensor.hpp"

namespace gcd::data {

struct Example {
    std::vector<double> x; // pixels/coordinates in [0,1] (images) row-major
    int label = 0;
};

struct Dataset {
    Shape input_shape;
    int num_classes = 0;
    std::vector<Example> items;

    std::size_t size() const { return items.size(); }
    Dataset slice(std::size_t offset, std::size_t count) const;
};

/// IDX readers per the published MNIST format: big-endian magic 0x00000803
/// (images) / 0x00000801 (labels), big-endian dims, unsigned byte payload.
/// Pixels are scaled to [0,1]. limit=0 reads everything.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       std::size_t limit = 0);

/// Writes a dataset of 2-d single-channel images as an IDX pair, quantizing
/// pixels to round(x*255).
void write_mnist_idx(const Dataset& dataset, const std::string& images_path,
                     const std::string& labels_path);

struct ToyParams {
    int per_class = 200;
    double x_min = -3.0;
    double x_max = 3.0;
    double band_offset = 1.0; // lines y = x ± band_offset
    double noise = 0.25;      // isotropic Gaussian noise sigma
};

/// Two noisy parallel bands y = x + offset (class 1) and y = x - offset
/// (class 0) over x in [x_min, x_max].
Dataset generate_toy_dataset(const ToyParams& params, std::uint64_t seed);

/// Synthetic 28×28 handwritten-style digit images: glyph masks with random
/// affine jitter, stroke blur and pixel noise, quantized to 8 bits. Serves as
/// the self-contained desk-scale stand-in for an MNIST subset.
Dataset generate_digit_dataset(int count, std::uint64_t seed);

} // namespace gcd::data

#endif
