/**
 * @file orientation.hpp
 * @brief Gradient fields, normal vector patches and the orientation weight
 *        factor eta that modulates patch distances in stage 2.
 *
 * The "normal vector" at a pixel is the raw gradient pair (gx, gy). For two
 * patch centers i and j the inner-product patch is
 *
 *     Gamma(k,l) = gx(i+kl) gx(j+kl) + gy(i+kl) gy(j+kl)
 *
 * and eta(i,j) = exp(-sum Gamma / ((m^2 - 1) max|Gamma|)). Normalizing by
 * max|Gamma| rather than max Gamma keeps eta bounded for anti-aligned
 * patches; a gradient-free pair gives the neutral value 1.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mhnlm/image.hpp"

namespace mhnlm {

struct GradientField {
    ImageGrid gx;  ///< d/dx (along columns)
    ImageGrid gy;  ///< d/dy (along rows)
};

struct GammaPatch {
    int side = 0;
    std::vector<double> values;
};

/// max|Gamma| at or below this is treated as a flat pair.
inline constexpr double kEtaFlatEpsilon = 1e-12;

/// Central differences with symmetric boundary extension, so the component
/// perpendicular to a border is 0 on that border.
GradientField gradient(const ImageGrid& img);

/// Gradient of the mirror extension of `img`, evaluated on the padded grid
/// pad(img, radius). Equal to gradient(img) on the interior.
GradientField extended_gradient(const ImageGrid& img, int radius);

/// Rescales every nonzero (gx, gy) to unit length.
GradientField unit_normals(const GradientField& field);

/// Element-wise inner products of the side x side windows around i and j.
GammaPatch gamma(const GradientField& field, Coord i, Coord j, int side);

double eta(const GammaPatch& g);

/// eta from the two reductions of Gamma; shared by every kernel. The clamp
/// is the analytic range |sum| <= m^2 max|Gamma|.
inline double eta_from_reductions(double gamma_sum, double gamma_max_abs, int side) noexcept {
    if (gamma_max_abs <= kEtaFlatEpsilon) return 1.0;
    const double msq = static_cast<double>(side) * side;
    const double bound = msq / (msq - 1.0);
    double exponent = -gamma_sum / ((msq - 1.0) * gamma_max_abs);
    exponent = std::clamp(exponent, -bound, bound);
    return std::exp(exponent);
}

}  // namespace mhnlm
