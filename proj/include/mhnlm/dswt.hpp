/**
 * @file dswt.hpp
 * @brief Two-dimensional stationary (undecimated, a trous) wavelet transform.
 *
 * Level j filters are the base taps upsampled by 2^(j-1). Every band keeps
 * the full image resolution. Inversion is the least-squares left inverse of
 * the analysis filter bank: away from the borders this is the usual average
 * of the low and high synthesis branches; within one filter support of a
 * border a small dense correction undoes the symmetric extension exactly.
 */
#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mhnlm/image.hpp"

namespace mhnlm {

enum class WaveletId { Haar, Db2, Db4 };

std::string_view to_string(WaveletId id) noexcept;
/// Accepts "haar", "db2", "db4" (case-insensitive). Throws InvalidArgument.
WaveletId parse_wavelet(std::string_view name);

/// Orthogonal quadrature-mirror pair. lowpass sums to sqrt(2), unit norm.
struct WaveletFilters {
    std::vector<double> lowpass;
    std::vector<double> highpass;  ///< g[n] = (-1)^n h[L-1-n]
    WaveletId id = WaveletId::Db2;

    static WaveletFilters make(WaveletId id);
    int length() const noexcept { return static_cast<int>(lowpass.size()); }
};

/// Boundary handling. Periodic exists for shift-covariance tests.
enum class Extension { Symmetric, Periodic };

enum class Orientation { X = 0, Y = 1, XY = 2 };

struct DetailLevel {
    ImageGrid x;   ///< highpass along rows (x), lowpass along columns
    ImageGrid y;   ///< lowpass along x, highpass along y
    ImageGrid xy;  ///< highpass both

    ImageGrid& band(Orientation o) noexcept;
    const ImageGrid& band(Orientation o) const noexcept;
};

struct WaveletPyramid {
    std::vector<DetailLevel> details;  ///< details[j-1] holds level j
    ImageGrid approx;                  ///< S at the coarsest level
    WaveletId wavelet = WaveletId::Db2;
    Extension extension = Extension::Symmetric;

    int levels() const noexcept { return static_cast<int>(details.size()); }
    int width() const noexcept { return approx.width(); }
    int height() const noexcept { return approx.height(); }
};

/// Largest J that satisfies 2^(J-1) (L-1) < min(width, height).
int max_levels(int width, int height, const WaveletFilters& filters);

WaveletPyramid forward(const ImageGrid& img, int levels, const WaveletFilters& filters,
                       Extension ext = Extension::Symmetric);

ImageGrid inverse(const WaveletPyramid& pyr, const WaveletFilters& filters);

/// Debug dump: one PGM per band (affinely rescaled to [0,255]) plus
/// bands.json with each band's true (min, max).
void dump_pyramid(const WaveletPyramid& pyr, const std::filesystem::path& dir);

}  // namespace mhnlm
