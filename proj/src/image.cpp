#include "mhnlm/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace mhnlm {

ImageGrid::ImageGrid(int width, int height, double fill)
    : width_(width), height_(height) {
    if (width < 1 || height < 1) {
        throw InvalidArgument("ImageGrid: width and height must be >= 1, got " +
                              std::to_string(width) + "x" + std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

ImageGrid::ImageGrid(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1) {
        throw InvalidArgument("ImageGrid: width and height must be >= 1");
    }
    if (data_.size() != static_cast<std::size_t>(width) * height) {
        throw InvalidArgument("ImageGrid: data length " + std::to_string(data_.size()) +
                              " does not match " + std::to_string(width) + "x" +
                              std::to_string(height));
    }
}

bool ImageGrid::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

ImageGrid pad(const ImageGrid& img, int radius) {
    if (radius < 0) throw InvalidArgument("pad: negative radius");
    if (radius == 0) return img;
    const int w = img.width();
    const int h = img.height();
    if ((w > 1 && radius >= w) || (h > 1 && radius >= h)) {
        throw InvalidArgument("pad: radius " + std::to_string(radius) +
                              " must be smaller than image extent " + std::to_string(w) +
                              "x" + std::to_string(h));
    }
    ImageGrid out(w + 2 * radius, h + 2 * radius);
    for (int r = 0; r < out.height(); ++r) {
        const double* src = img.row_ptr(mirror_index(r - radius, h));
        double* dst = out.row_ptr(r);
        for (int c = 0; c < out.width(); ++c) {
            dst[c] = src[mirror_index(c - radius, w)];
        }
    }
    return out;
}

ImageGrid crop(const ImageGrid& img, int radius) {
    if (radius < 0 || 2 * radius >= img.width() || 2 * radius >= img.height()) {
        throw InvalidArgument("crop: radius leaves no interior");
    }
    ImageGrid out(img.width() - 2 * radius, img.height() - 2 * radius);
    for (int r = 0; r < out.height(); ++r) {
        const double* src = img.row_ptr(r + radius) + radius;
        std::copy(src, src + out.width(), out.row_ptr(r));
    }
    return out;
}

Patch extract_patch(const ImageGrid& img, Coord center, int side) {
    if (side < 3 || side % 2 == 0) {
        throw InvalidArgument("extract_patch: side must be odd and >= 3, got " +
                              std::to_string(side));
    }
    const int half = side / 2;
    if (center.row - half < 0 || center.col - half < 0 || center.row + half >= img.height() ||
        center.col + half >= img.width()) {
        throw InvalidArgument("extract_patch: window around (" + std::to_string(center.row) +
                              "," + std::to_string(center.col) + ") exceeds grid bounds");
    }
    Patch p{side, {}, center};
    p.values.reserve(static_cast<std::size_t>(side) * side);
    for (int k = -half; k <= half; ++k) {
        const double* row = img.row_ptr(center.row + k);
        for (int l = -half; l <= half; ++l) p.values.push_back(row[center.col + l]);
    }
    return p;
}

ImageGrid add_awgn(const ImageGrid& img, const NoiseSpec& noise) {
    if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma)) {
        throw InvalidArgument("add_awgn: sigma must be finite and >= 0");
    }
    if (noise.sigma == 0.0) return img;

    std::mt19937_64 engine(noise.seed);
    // 53-bit uniform in (0,1]; excluding 0 keeps log() finite.
    auto uniform = [&engine] {
        return (static_cast<double>(engine() >> 11) + 1.0) * 0x1.0p-53;
    };

    ImageGrid out = img;
    auto px = out.pixels();
    std::size_t i = 0;
    while (i < px.size()) {
        const double radius = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        px[i++] += noise.sigma * radius * std::cos(angle);
        if (i < px.size()) px[i++] += noise.sigma * radius * std::sin(angle);
    }
    return out;
}

double mse(const ImageGrid& reference, const ImageGrid& test) {
    if (!reference.same_shape(test)) {
        throw InvalidArgument("mse: dimension mismatch " + std::to_string(reference.width()) +
                              "x" + std::to_string(reference.height()) + " vs " +
                              std::to_string(test.width()) + "x" +
                              std::to_string(test.height()));
    }
    const auto a = reference.pixels();
    const auto b = test.pixels();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double psnr(const ImageGrid& reference, const ImageGrid& test) {
    const double err = mse(reference, test);
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / err);
}

std::uint8_t quantize(double value) noexcept {
    if (!(value > 0.0)) return 0;  // also maps NaN to 0
    if (value >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::round(value));
}

ImageGrid quantized(const ImageGrid& img) {
    ImageGrid out = img;
    for (double& v : out.pixels()) v = quantize(v);
    return out;
}

}  // namespace mhnlm
