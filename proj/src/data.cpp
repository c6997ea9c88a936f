#include "gcd/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>

#include "gcd/errors.hpp"
#include "gcd/rng.hpp"

namespace gcd::data {

Dataset Dataset::slice(std::size_t offset, std::size_t count) const {
    if (offset + count > items.size())
        throw ContractError("dataset slice [" + std::to_string(offset) + ", " +
                            std::to_string(offset + count) + ") exceeds size " +
                            std::to_string(items.size()));
    Dataset out;
    out.input_shape = input_shape;
    out.num_classes = num_classes;
    out.items.assign(items.begin() + static_cast<long>(offset),
                     items.begin() + static_cast<long>(offset + count));
    return out;
}

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& is, const std::string& what) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw ParseError("idx: truncated while reading " + what);
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

void write_u32_be(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>((v >> 24) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>(v & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::string hex32(std::uint32_t v) {
    char buf[11];
    std::snprintf(buf, sizeof(buf), "0x%08x", v);
    return buf;
}

} // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       std::size_t limit) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw ParseError("idx: cannot open images file '" + images_path + "'");
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw ParseError("idx: cannot open labels file '" + labels_path + "'");

    const auto img_magic = read_u32_be(imgs, "images magic");
    if (img_magic != kImagesMagic)
        throw ParseError("idx: images magic is " + hex32(img_magic) + ", expected " + hex32(kImagesMagic));
    const auto lab_magic = read_u32_be(labs, "labels magic");
    if (lab_magic != kLabelsMagic)
        throw ParseError("idx: labels magic is " + hex32(lab_magic) + ", expected " + hex32(kLabelsMagic));

    const auto n_images = read_u32_be(imgs, "image count");
    const auto rows = read_u32_be(imgs, "row count");
    const auto cols = read_u32_be(imgs, "column count");
    const auto n_labels = read_u32_be(labs, "label count");
    if (n_images != n_labels)
        throw ParseError("idx: image count " + std::to_string(n_images) + " != label count " +
                         std::to_string(n_labels));
    if (rows == 0 || cols == 0) throw ParseError("idx: zero image dimensions");

    std::size_t n = n_images;
    if (limit > 0) n = std::min(n, limit);

    Dataset out;
    out.input_shape = {1, static_cast<int>(rows), static_cast<int>(cols)};
    out.num_classes = 10;
    out.items.reserve(n);
    const std::size_t px = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> buf(px);
    for (std::size_t i = 0; i < n; ++i) {
        imgs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(px));
        if (!imgs)
            throw ParseError("idx: truncated image payload at image " + std::to_string(i) + " of " +
                             std::to_string(n));
        char lab;
        labs.read(&lab, 1);
        if (!labs) throw ParseError("idx: truncated label payload at label " + std::to_string(i));
        Example ex;
        ex.x.resize(px);
        for (std::size_t p = 0; p < px; ++p) ex.x[p] = static_cast<double>(buf[p]) / 255.0;
        ex.label = static_cast<unsigned char>(lab);
        out.items.push_back(std::move(ex));
    }
    return out;
}

void write_mnist_idx(const Dataset& dataset, const std::string& images_path,
                     const std::string& labels_path) {
    if (dataset.input_shape.size() != 3 || dataset.input_shape[0] != 1)
        throw ContractError("write_mnist_idx expects single-channel image data");
    std::ofstream imgs(images_path, std::ios::binary);
    if (!imgs) throw ParseError("idx: cannot open '" + images_path + "' for writing");
    std::ofstream labs(labels_path, std::ios::binary);
    if (!labs) throw ParseError("idx: cannot open '" + labels_path + "' for writing");

    const auto rows = static_cast<std::uint32_t>(dataset.input_shape[1]);
    const auto cols = static_cast<std::uint32_t>(dataset.input_shape[2]);
    write_u32_be(imgs, kImagesMagic);
    write_u32_be(imgs, static_cast<std::uint32_t>(dataset.items.size()));
    write_u32_be(imgs, rows);
    write_u32_be(imgs, cols);
    write_u32_be(labs, kLabelsMagic);
    write_u32_be(labs, static_cast<std::uint32_t>(dataset.items.size()));

    std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
    for (const auto& ex : dataset.items) {
        for (std::size_t p = 0; p < buf.size(); ++p) {
            const double v = std::clamp(ex.x[p], 0.0, 1.0);
            buf[p] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        imgs.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        const char lab = static_cast<char>(ex.label);
        labs.write(&lab, 1);
    }
    if (!imgs || !labs) throw ParseError("idx: write failed");
}

Dataset generate_toy_dataset(const ToyParams& params, std::uint64_t seed) {
    Dataset out;
    out.input_shape = {2};
    out.num_classes = 2;
    out.items.reserve(static_cast<std::size_t>(params.per_class) * 2);
    auto rng = make_engine(seed);
    std::uniform_real_distribution<double> ux(params.x_min, params.x_max);
    std::normal_distribution<double> noise(0.0, params.noise);
    for (int cls = 0; cls < 2; ++cls) {
        const double off = cls == 1 ? params.band_offset : -params.band_offset;
        for (int i = 0; i < params.per_class; ++i) {
            const double x = ux(rng);
            Example ex;
            ex.x = {x + noise(rng), x + off + noise(rng)};
            ex.label = cls;
            out.items.push_back(std::move(ex));
        }
    }
    return out;
}

// ---- synthetic digits -------------------------------------------------------

namespace {

// 7×5 glyph masks, one per digit.
constexpr std::array<const char*, 10> kGlyphs = {
    "#####"
    "#...#"
    "#...#"
    "#...#"
    "#...#"
    "#...#"
    "#####", // 0
    "..#.."
    ".##.."
    "..#.."
    "..#.."
    "..#.."
    "..#.."
    ".###.", // 1
    "#####"
    "....#"
    "....#"
    "#####"
    "#...."
    "#...."
    "#####", // 2
    "#####"
    "....#"
    "....#"
    ".####"
    "....#"
    "....#"
    "#####", // 3
    "#...#"
    "#...#"
    "#...#"
    "#####"
    "....#"
    "....#"
    "....#", // 4
    "#####"
    "#...."
    "#...."
    "#####"
    "....#"
    "....#"
    "#####", // 5
    "#####"
    "#...."
    "#...."
    "#####"
    "#...#"
    "#...#"
    "#####", // 6
    "#####"
    "....#"
    "...#."
    "...#."
    "..#.."
    "..#.."
    "..#..", // 7
    "#####"
    "#...#"
    "#...#"
    "#####"
    "#...#"
    "#...#"
    "#####", // 8
    "#####"
    "#...#"
    "#...#"
    "#####"
    "....#"
    "....#"
    "#####", // 9
};

constexpr int kGlyphH = 7, kGlyphW = 5;
constexpr int kImg = 28;

double glyph_sample(int digit, double gy, double gx) {
    // Bilinear sample of the glyph mask at fractional glyph coordinates.
    if (gy < -0.5 || gx < -0.5 || gy > kGlyphH - 0.5 || gx > kGlyphW - 0.5) return 0.0;
    const auto at = [&](int r, int c) -> double {
        if (r < 0 || c < 0 || r >= kGlyphH || c >= kGlyphW) return 0.0;
        return kGlyphs[static_cast<size_t>(digit)][r * kGlyphW + c] == '#' ? 1.0 : 0.0;
    };
    const int r0 = static_cast<int>(std::floor(gy)), c0 = static_cast<int>(std::floor(gx));
    const double fy = gy - r0, fx = gx - c0;
    return at(r0, c0) * (1 - fy) * (1 - fx) + at(r0, c0 + 1) * (1 - fy) * fx +
           at(r0 + 1, c0) * fy * (1 - fx) + at(r0 + 1, c0 + 1) * fy * fx;
}

} // namespace

Dataset generate_digit_dataset(int count, std::uint64_t seed) {
    if (count <= 0) throw ConfigError("generate_digit_dataset: count must be positive");
    Dataset out;
    out.input_shape = {1, kImg, kImg};
    out.num_classes = 10;
    out.items.resize(static_cast<std::size_t>(count));

    for (int i = 0; i < count; ++i) {
        auto rng = make_engine(derive_seed(seed, static_cast<std::uint64_t>(i)));
        std::uniform_int_distribution<int> digit_dist(0, 9);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        std::normal_distribution<double> pix_noise(0.0, 0.04);

        const int digit = digit_dist(rng);
        const double angle = 0.22 * unif(rng);               // ±~12.5°
        const double scale = 2.6 * (1.0 + 0.12 * unif(rng)); // image px per glyph px
        const double dy = 2.0 * unif(rng), dx = 2.0 * unif(rng);
        const double ca = std::cos(angle), sa = std::sin(angle);

        std::vector<double> img(kImg * kImg, 0.0);
        for (int y = 0; y < kImg; ++y)
            for (int x = 0; x < kImg; ++x) {
                // map image coords back into glyph space
                const double cy = y - kImg / 2.0 - dy;
                const double cx = x - kImg / 2.0 - dx;
                const double gy = (ca * cy + sa * cx) / scale + kGlyphH / 2.0 - 0.5;
                const double gx = (-sa * cy + ca * cx) / scale + kGlyphW / 2.0 - 0.5;
                img[y * kImg + x] = glyph_sample(digit, gy, gx);
            }

        // light 3×3 box blur softens the strokes
        std::vector<double> blurred(img.size(), 0.0);
        for (int y = 0; y < kImg; ++y)
            for (int x = 0; x < kImg; ++x) {
                double acc = 0.0;
                int cnt = 0;
                for (int ddy = -1; ddy <= 1; ++ddy)
                    for (int ddx = -1; ddx <= 1; ++ddx) {
                        const int yy = y + ddy, xx = x + ddx;
                        if (yy < 0 || xx < 0 || yy >= kImg || xx >= kImg) continue;
                        acc += img[yy * kImg + xx];
                        ++cnt;
                    }
                blurred[y * kImg + x] = acc / cnt;
            }

        Example ex;
        ex.label = digit;
        ex.x.resize(blurred.size());
        for (std::size_t p = 0; p < blurred.size(); ++p) {
            const double v = std::clamp(blurred[p] + pix_noise(rng), 0.0, 1.0);
            ex.x[p] = std::lround(v * 255.0) / 255.0; // quantize like 8-bit imagery
        }
        out.items[static_cast<std::size_t>(i)] = std::move(ex);
    }
    return out;
}

} // namespace gcd::data
