#pragma once

#include <string_view>

namespace mhnlm {

/// How squared patch distances are scaled before entering exp(-d2 / h^2).
/// Normalized: per-pixel mean (spatial kernel sums to 1). Raw: sum over the
/// m x m patch, i.e. m^2 times the normalized value.
enum class DistanceConvention { Normalized, Raw };

std::string_view to_string(DistanceConvention c) noexcept;
DistanceConvention parse_distance_convention(std::string_view name);

inline double distance_scale(DistanceConvention c, int patch_side) noexcept {
    return c == DistanceConvention::Raw ? static_cast<double>(patch_side) * patch_side : 1.0;
}

}  // namespace mhnlm
