/**
 * @file modified_nlm.hpp
 * @brief Pixelwise non-local means whose weights come from a reference
 *        (pre-denoised) image and the orientation factor eta.
 *
 *     u(i) = (w(i,i) noisy(i) + sum_{j != i} w(i,j) noisy(j)) / K(i)
 *     w(i,j) = exp(-d2(i,j) * eta(i,j) / h^2)
 *
 * d2 is the squared distance between reference patches (divided by m^2 under
 * the normalized convention). w(i,i) is the row maximum, boosted by
 * self_weight_boost when sigma <= boost_sigma_max. The kernels evaluate the
 * equivalent noisy(i) + sum_j w(i,j) (noisy(j) - noisy(i)) / K(i), which is
 * exact on flat regions.
 */
#pragma once

#include <vector>

#include "mhnlm/distance.hpp"
#include "mhnlm/image.hpp"
#include "mhnlm/orientation.hpp"

namespace mhnlm {

struct ModNlmParams {
    int patch_side = 7;
    int window_side = 15;
    double h = 1.0;
    double sigma = 0.0;
    double self_weight_boost = 4.0 / 3.0;
    double boost_sigma_max = 20.0;
    DistanceConvention distance = DistanceConvention::Raw;
    bool use_eta = true;        ///< false forces eta == 1 (ablation)
    bool unit_normals = false;  ///< normalize gradients before Gamma

    void validate() const;
    int padding() const noexcept { return window_side / 2 + patch_side / 2; }
};

struct WeightEntry {
    Coord j;
    double weight = 0.0;
};

struct WeightRow {
    Coord center;
    std::vector<WeightEntry> entries;  ///< j != i, window row-major order
    double self_weight = 0.0;
    double normalizer = 0.0;  ///< self_weight + sum of entries
};

/// Squared distance between the reference patches at i and j under the
/// chosen convention.
double reference_distance(const ImageGrid& ref, Coord i, Coord j, int side,
                          DistanceConvention convention);

/// w(i,j) for i != j. `ref` and `grad` share one grid; windows must be inside.
double modified_weight(const ImageGrid& ref, const GradientField& grad, Coord i, Coord j,
                       const ModNlmParams& p);

/// Multiplier applied to the row maximum: self_weight_boost when
/// sigma <= boost_sigma_max, else 1.
double self_weight_multiplier(const ModNlmParams& p) noexcept;

double self_weight(double row_max, const ModNlmParams& p);

/// All weights of pixel i; grid coordinates of `ref`/`grad`.
WeightRow weight_row(const ImageGrid& ref, const GradientField& grad, Coord i,
                     const ModNlmParams& p);

/// Parallel kernel. Output is bit-identical for any OpenMP thread count.
ImageGrid denoise(const ImageGrid& noisy, const ImageGrid& reference, const ModNlmParams& p);

namespace serial {
/// Per-pixel composition of weight_row; reference for tests and benchmarks.
ImageGrid denoise(const ImageGrid& noisy, const ImageGrid& reference, const ModNlmParams& p);
}  // namespace serial

}  // namespace mhnlm
