/**
 * @file block_nlm.hpp
 * @brief Blockwise ("accelerated") non-local means with a Gaussian-weighted
 *        patch distance. Used on wavelet detail bands.
 *
 * Weights are evaluated once per block center on a strided lattice. Each
 * block center i yields an estimate of its whole m x m patch,
 *
 *     B(i) = (1/K(i)) * sum_{j in window(i)} w(i,j) * P(j),
 *     w(i,j) = exp(-|P(i) - P(j)|^2_G / h^2),   w(i,i) = max_{j != i} w(i,j),
 *
 * and every pixel is the plain average of the block estimates covering it.
 * |.|_G uses the sum-one Gaussian kernel; the Raw convention multiplies it by
 * m^2. Estimates are accumulated as deviations from the input, so a constant
 * band comes back bit-exact.
 */
#pragma once

#include <vector>

#include "mhnlm/distance.hpp"
#include "mhnlm/image.hpp"

namespace mhnlm {

struct BlockNlmParams {
    int patch_side = 9;
    int window_side = 15;
    double h = 1.0;
    double alpha = 2.0;  ///< std dev of the spatial Gaussian, in pixels
    int block_step = 4;  ///< lattice stride between block centers
    DistanceConvention distance = DistanceConvention::Normalized;

    /// Defaults tied to a patch size: alpha = (m-1)/4, step = m/2.
    static BlockNlmParams with_patch(int patch_side, int window_side, double h);

    /// Throws InvalidArgument naming the violated invariant.
    void validate() const;

    /// Mirror padding the kernel applies before reading windows.
    int padding() const noexcept { return window_side / 2 + patch_side / 2; }
};

/// Normalized m x m Gaussian weights (sum 1).
struct SpatialKernel {
    int side = 0;
    std::vector<double> weights;

    static SpatialKernel gaussian(int side, double alpha);
    double operator()(int k, int l) const noexcept {
        return weights[static_cast<std::size_t>(k) * side + l];
    }
};

/// sum_{k,l} kernel(k,l) * (a(k,l) - b(k,l))^2
double patch_distance_weighted(const Patch& a, const Patch& b, const SpatialKernel& kernel);

/// exp(-dist2 / h^2)
double nlm_weight(double dist2, double h);

/// Lattice coordinates 0, step, 2 step, ... plus extent-1 if not already hit.
std::vector<int> block_lattice(int extent, int step);

/// Parallel kernel. Output is bit-identical for any OpenMP thread count.
ImageGrid denoise_band(const ImageGrid& band, const BlockNlmParams& p);

namespace serial {
/// Straightforward single-threaded implementation built from
/// extract_patch / patch_distance_weighted. Kept for testing and benchmarks.
ImageGrid denoise_band(const ImageGrid& band, const BlockNlmParams& p);
}  // namespace serial

}  // namespace mhnlm
