/**
 * @file image.hpp
 * @brief Pixel grid, mirror padding, patches, AWGN synthesis and PSNR.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mhnlm/errors.hpp"

namespace mhnlm {

struct Coord {
    int row = 0;
    int col = 0;

    friend bool operator==(const Coord&, const Coord&) = default;
};

/// Row-major grid of double intensities. Nominal range is [0,255] but any
/// finite value is allowed (wavelet detail bands are signed).
class ImageGrid {
public:
    ImageGrid() = default;
    ImageGrid(int width, int height, double fill = 0.0);
    ImageGrid(int width, int height, std::vector<double> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double operator()(int row, int col) const noexcept {
        return data_[static_cast<std::size_t>(row) * width_ + col];
    }
    double& operator()(int row, int col) noexcept {
        return data_[static_cast<std::size_t>(row) * width_ + col];
    }

    std::span<const double> pixels() const noexcept { return data_; }
    std::span<double> pixels() noexcept { return data_; }

    const double* row_ptr(int row) const noexcept {
        return data_.data() + static_cast<std::size_t>(row) * width_;
    }
    double* row_ptr(int row) noexcept {
        return data_.data() + static_cast<std::size_t>(row) * width_;
    }

    bool same_shape(const ImageGrid& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }
    bool all_finite() const noexcept;

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Square m x m window of intensities, m odd.
struct Patch {
    int side = 0;
    std::vector<double> values;
    Coord center;

    double operator()(int k, int l) const noexcept {
        return values[static_cast<std::size_t>(k) * side + l];
    }
};

struct NoiseSpec {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

/// Whole-sample symmetric reflection ("mirror without edge repeat"):
/// -1 -> 1, n -> n-2. A length-1 axis maps everything to 0. Valid for
/// indices in (-n, 2n-1).
inline int mirror_index(int i, int n) noexcept {
    if (n == 1) return 0;
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return i;
}

/// Symmetric mirror extension by `radius` on every side. Interior is copied
/// bit-exactly. Throws if the radius reaches the extent of an axis longer than
/// one pixel (reflection would need a second fold).
ImageGrid pad(const ImageGrid& img, int radius);

/// Inverse of pad: the (width-2r) x (height-2r) interior.
ImageGrid crop(const ImageGrid& img, int radius);

Patch extract_patch(const ImageGrid& img, Coord center, int side);

/// out = img + n, n ~ N(0, sigma^2) drawn from mt19937_64(seed) through the
/// Box-Muller transform (both variates used, 53-bit uniforms). No clipping.
ImageGrid add_awgn(const ImageGrid& img, const NoiseSpec& noise);

double mse(const ImageGrid& reference, const ImageGrid& test);

/// 10 log10(255^2 / MSE). Returns +infinity when the images are identical.
double psnr(const ImageGrid& reference, const ImageGrid& test);

/// Reads a PGM (P5 binary or P2 ASCII, maxval 255).
ImageGrid read_image(const std::filesystem::path& path);

/// Writes binary P5 PGM. Values are clamped to [0,255] and rounded half away
/// from zero.
void write_image(const ImageGrid& img, const std::filesystem::path& path);

/// The byte each intensity is stored as by write_image.
std::uint8_t quantize(double value) noexcept;

/// Round-trip through 8-bit storage without touching disk.
ImageGrid quantized(const ImageGrid& img);

}  // namespace mhnlm
