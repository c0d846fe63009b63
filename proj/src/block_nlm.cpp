#include "mhnlm/block_nlm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mhnlm {

std::string_view to_string(DistanceConvention c) noexcept {
    return c == DistanceConvention::Normalized ? "normalized" : "raw";
}

DistanceConvention parse_distance_convention(std::string_view name) {
    if (name == "normalized") return DistanceConvention::Normalized;
    if (name == "raw") return DistanceConvention::Raw;
    throw InvalidArgument("unknown distance convention '" + std::string(name) +
                          "' (expected normalized or raw)");
}

BlockNlmParams BlockNlmParams::with_patch(int patch_side, int window_side, double h) {
    BlockNlmParams p;
    p.patch_side = patch_side;
    p.window_side = window_side;
    p.h = h;
    p.alpha = (patch_side - 1) / 4.0;
    p.block_step = std::max(1, patch_side / 2);
    return p;
}

void BlockNlmParams::validate() const {
    if (patch_side < 3 || patch_side % 2 == 0) {
        throw InvalidArgument("block_nlm: patch_side must be odd and >= 3 (got " +
                              std::to_string(patch_side) + ")");
    }
    if (window_side % 2 == 0) {
        throw InvalidArgument("block_nlm: window_side must be odd (got " +
                              std::to_string(window_side) + ")");
    }
    if (patch_side >= window_side) {
        throw InvalidArgument("block_nlm: patch_side < window_side violated (" +
                              std::to_string(patch_side) + " >= " + std::to_string(window_side) +
                              ")");
    }
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("block_nlm: h > 0 violated");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw InvalidArgument("block_nlm: alpha > 0 violated");
    }
    if (block_step < 1 || block_step > patch_side) {
        throw InvalidArgument("block_nlm: 1 <= block_step <= patch_side violated (step " +
                              std::to_string(block_step) + ")");
    }
}

SpatialKernel SpatialKernel::gaussian(int side, double alpha) {
    if (side < 1 || side % 2 == 0) throw InvalidArgument("SpatialKernel: side must be odd");
    if (!(alpha > 0.0)) throw InvalidArgument("SpatialKernel: alpha must be > 0");
    SpatialKernel k{side, std::vector<double>(static_cast<std::size_t>(side) * side)};
    const int half = side / 2;
    double total = 0.0;
    for (int r = -half; r <= half; ++r) {
        for (int c = -half; c <= half; ++c) {
            const double v = std::exp(-(r * r + c * c) / (2.0 * alpha * alpha));
            k.weights[static_cast<std::size_t>(r + half) * side + (c + half)] = v;
            total += v;
        }
    }
    for (double& v : k.weights) v /= total;
    return k;
}

double patch_distance_weighted(const Patch& a, const Patch& b, const SpatialKernel& kernel) {
    if (a.side != b.side || a.side != kernel.side) {
        throw InvalidArgument("patch_distance_weighted: side mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        acc += kernel.weights[i] * d * d;
    }
    return acc;
}

double nlm_weight(double dist2, double h) { return std::exp(-dist2 / (h * h)); }

std::vector<int> block_lattice(int extent, int step) {
    std::vector<int> out;
    for (int v = 0; v < extent; v += step) out.push_back(v);
    if (out.back() != extent - 1) out.push_back(extent - 1);
    return out;
}

ImageGrid denoise_band(const ImageGrid& band, const BlockNlmParams& p) {
    p.validate();
    const int pad_r = p.padding();
    const ImageGrid padded = pad(band, pad_r);
    const int stride = padded.width();
    const int m = p.patch_side;
    const int half = m / 2;
    const int whalf = p.window_side / 2;
    const int msq = m * m;
    const double inv_h2 = distance_scale(p.distance, m) / (p.h * p.h);
    const SpatialKernel kernel = SpatialKernel::gaussian(m, p.alpha);

    // Patch element offsets relative to the patch center in the padded grid.
    std::vector<std::ptrdiff_t> patch_off;
    for (int k = -half; k <= half; ++k) {
        for (int l = -half; l <= half; ++l) patch_off.push_back(std::ptrdiff_t{k} * stride + l);
    }

    const std::vector<int> rows = block_lattice(band.height(), p.block_step);
    const std::vector<int> cols = block_lattice(band.width(), p.block_step);
    const int ncols = static_cast<int>(cols.size());
    const double* base = padded.pixels().data();

    ImageGrid sum(band.width(), band.height(), 0.0);
    ImageGrid count(band.width(), band.height(), 0.0);
    std::vector<double> estimates(static_cast<std::size_t>(ncols) * msq);

    for (const int r : rows) {
#pragma omp parallel
        {
            std::vector<double> ref(msq);
            std::vector<double> acc(msq);
#pragma omp for schedule(static)
            for (int b = 0; b < ncols; ++b) {
                const double* center = base + std::ptrdiff_t{r + pad_r} * stride + (cols[b] + pad_r);
                for (int e = 0; e < msq; ++e) ref[e] = center[patch_off[e]];
                std::fill(acc.begin(), acc.end(), 0.0);
                double norm = 0.0;
                double wmax = 0.0;
                for (int dy = -whalf; dy <= whalf; ++dy) {
                    for (int dx = -whalf; dx <= whalf; ++dx) {
                        if (dy == 0 && dx == 0) continue;
                        const double* cand = center + std::ptrdiff_t{dy} * stride + dx;
                        double dist = 0.0;
                        for (int e = 0; e < msq; ++e) {
                            const double d = ref[e] - cand[patch_off[e]];
                            dist += kernel.weights[e] * d * d;
                        }
                        const double w = std::exp(-dist * inv_h2);
                        if (w == 0.0) continue;
                        wmax = std::max(wmax, w);
                        norm += w;
                        for (int e = 0; e < msq; ++e) acc[e] += w * (cand[patch_off[e]] - ref[e]);
                    }
                }
                // Estimates are stored as deviations from the block's own
                // patch, so flat regions stay exactly flat.
                double* out = estimates.data() + static_cast<std::size_t>(b) * msq;
                if (wmax > 0.0) {
                    norm += wmax;
                    for (int e = 0; e < msq; ++e) out[e] = acc[e] / norm;
                } else {
                    std::fill(out, out + msq, 0.0);
                }
            }

            // Fold this lattice row into the aggregation buffers, one image row
            // per iteration so each pixel sees blocks in lattice order.
#pragma omp for schedule(static)
            for (int k = -half; k <= half; ++k) {
                const int y = r + k;
                if (y < 0 || y >= band.height()) continue;
                double* srow = sum.row_ptr(y);
                double* crow = count.row_ptr(y);
                for (int b = 0; b < ncols; ++b) {
                    const double* est = estimates.data() + static_cast<std::size_t>(b) * msq +
                                        static_cast<std::size_t>(k + half) * m;
                    for (int l = -half; l <= half; ++l) {
                        const int x = cols[b] + l;
                        if (x < 0 || x >= band.width()) continue;
                        srow[x] += est[l + half];
                        crow[x] += 1.0;
                    }
                }
            }
        }
    }

    auto s = sum.pixels();
    auto c = count.pixels();
    const auto u = band.pixels();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = u[i] + s[i] / c[i];
    return sum;
}

}  // namespace mhnlm
