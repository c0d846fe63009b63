#include "mhnlm/modified_nlm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mhnlm {

void ModNlmParams::validate() const {
    if (patch_side < 3 || patch_side % 2 == 0) {
        throw InvalidArgument("modified_nlm: patch_side must be odd and >= 3 (got " +
                              std::to_string(patch_side) + ")");
    }
    if (window_side % 2 == 0) {
        throw InvalidArgument("modified_nlm: window_side must be odd (got " +
                              std::to_string(window_side) + ")");
    }
    if (patch_side >= window_side) {
        throw InvalidArgument("modified_nlm: patch_side < window_side violated (" +
                              std::to_string(patch_side) + " >= " +
                              std::to_string(window_side) + ")");
    }
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("modified_nlm: h > 0 violated");
    if (!(sigma >= 0.0)) throw InvalidArgument("modified_nlm: sigma >= 0 violated");
    if (!(self_weight_boost >= 1.0) || !std::isfinite(self_weight_boost)) {
        throw InvalidArgument("modified_nlm: self_weight_boost >= 1 violated");
    }
}

double reference_distance(const ImageGrid& ref, Coord i, Coord j, int side,
                          DistanceConvention convention) {
    const Patch a = extract_patch(ref, i, side);
    const Patch b = extract_patch(ref, j, side);
    double acc = 0.0;
    for (std::size_t e = 0; e < a.values.size(); ++e) {
        const double d = a.values[e] - b.values[e];
        acc += d * d;
    }
    if (convention == DistanceConvention::Normalized) acc /= static_cast<double>(side) * side;
    return acc;
}

double modified_weight(const ImageGrid& ref, const GradientField& grad, Coord i, Coord j,
                       const ModNlmParams& p) {
    if (i == j) throw InvalidArgument("modified_weight: i == j (use self_weight)");
    if (!ref.same_shape(grad.gx)) throw InvalidArgument("modified_weight: grid shape mismatch");
    const double d2 = reference_distance(ref, i, j, p.patch_side, p.distance);
    const double factor = p.use_eta ? eta(gamma(grad, i, j, p.patch_side)) : 1.0;
    return std::exp(-d2 * factor / (p.h * p.h));
}

double self_weight_multiplier(const ModNlmParams& p) noexcept {
    return p.sigma > p.boost_sigma_max ? 1.0 : p.self_weight_boost;
}

double self_weight(double row_max, const ModNlmParams& p) {
    return self_weight_multiplier(p) * row_max;
}

WeightRow weight_row(const ImageGrid& ref, const GradientField& grad, Coord i,
                     const ModNlmParams& p) {
    const int whalf = p.window_side / 2;
    WeightRow row;
    row.center = i;
    double wmax = 0.0;
    for (int dy = -whalf; dy <= whalf; ++dy) {
        for (int dx = -whalf; dx <= whalf; ++dx) {
            if (dy == 0 && dx == 0) continue;
            const Coord j{i.row + dy, i.col + dx};
            const double w = modified_weight(ref, grad, i, j, p);
            wmax = std::max(wmax, w);
            row.entries.push_back({j, w});
        }
    }
    row.self_weight = self_weight(wmax, p);
    row.normalizer = row.self_weight;
    for (const WeightEntry& e : row.entries) row.normalizer += e.weight;
    return row;
}

namespace {

constexpr int kStripRows = 16;

struct StripScratch {
    std::vector<double> dist2;     // halo rows x padded cols
    std::vector<double> inner;     // halo rows x padded cols
    std::vector<double> row_dist;  // halo rows x width
    std::vector<double> row_sum;
    std::vector<double> row_max;
    std::vector<double> acc;       // strip rows x width
    std::vector<double> norm;
    std::vector<double> wmax;
};

}  // namespace

ImageGrid denoise(const ImageGrid& noisy, const ImageGrid& reference, const ModNlmParams& p) {
    p.validate();
    if (!noisy.same_shape(reference)) {
        throw InvalidArgument("modified_nlm: noisy and reference dimensions differ");
    }
    const int w = noisy.width();
    const int h = noisy.height();
    const int pad_r = p.padding();
    const int m = p.patch_side;
    const int half = m / 2;
    const int whalf = p.window_side / 2;

    const ImageGrid ref = pad(reference, pad_r);
    const ImageGrid src = pad(noisy, pad_r);
    GradientField grad = extended_gradient(reference, pad_r);
    if (p.unit_normals) grad = unit_normals(grad);

    const int stride = ref.width();
    const int span = w + 2 * half;  // columns touched by a strip row's patches
    const double inv_h2 = 1.0 / (p.h * p.h);
    const double dist_scale = distance_scale(p.distance, m) / (static_cast<double>(m) * m);
    const double multiplier = self_weight_multiplier(p);
    const int strips = (h + kStripRows - 1) / kStripRows;

    ImageGrid out(w, h);

#pragma omp parallel
    {
        StripScratch s;
        const std::size_t halo_cap = static_cast<std::size_t>(kStripRows + 2 * half);
        s.dist2.resize(halo_cap * span);
        s.inner.resize(halo_cap * span);
        s.row_dist.resize(halo_cap * w);
        s.row_sum.resize(halo_cap * w);
        s.row_max.resize(halo_cap * w);
        s.acc.resize(static_cast<std::size_t>(kStripRows) * w);
        s.norm.resize(s.acc.size());
        s.wmax.resize(s.acc.size());

#pragma omp for schedule(static)
        for (int strip = 0; strip < strips; ++strip) {
            const int r0 = strip * kStripRows;
            const int r1 = std::min(h, r0 + kStripRows);
            const int rows = r1 - r0;
            const int halo = rows + 2 * half;
            std::fill(s.acc.begin(), s.acc.end(), 0.0);
            std::fill(s.norm.begin(), s.norm.end(), 0.0);
            std::fill(s.wmax.begin(), s.wmax.end(), 0.0);

            for (int dy = -whalf; dy <= whalf; ++dy) {
                for (int dx = -whalf; dx <= whalf; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    const std::ptrdiff_t shift = std::ptrdiff_t{dy} * stride + dx;

                    // Per-pixel squared differences and gradient inner products.
                    for (int hr = 0; hr < halo; ++hr) {
                        const std::ptrdiff_t prow =
                            std::ptrdiff_t{r0 - half + hr + pad_r} * stride + (pad_r - half);
                        const double* a = ref.pixels().data() + prow;
                        const double* gxa = grad.gx.pixels().data() + prow;
                        const double* gya = grad.gy.pixels().data() + prow;
                        double* d2 = s.dist2.data() + static_cast<std::size_t>(hr) * span;
                        double* in = s.inner.data() + static_cast<std::size_t>(hr) * span;
                        for (int c = 0; c < span; ++c) {
                            const double d = a[c] - a[c + shift];
                            d2[c] = d * d;
                            in[c] = gxa[c] * gxa[c + shift] + gya[c] * gya[c + shift];
                        }
                    }

                    // Horizontal reductions over m columns.
                    for (int hr = 0; hr < halo; ++hr) {
                        const double* d2 = s.dist2.data() + static_cast<std::size_t>(hr) * span;
                        const double* in = s.inner.data() + static_cast<std::size_t>(hr) * span;
                        double* rd = s.row_dist.data() + static_cast<std::size_t>(hr) * w;
                        double* rs = s.row_sum.data() + static_cast<std::size_t>(hr) * w;
                        double* rm = s.row_max.data() + static_cast<std::size_t>(hr) * w;
                        for (int c = 0; c < w; ++c) {
                            double sd = 0.0;
                            double sg = 0.0;
                            double mg = 0.0;
                            for (int l = 0; l < m; ++l) {
                                sd += d2[c + l];
                                sg += in[c + l];
                                mg = std::max(mg, std::abs(in[c + l]));
                            }
                            rd[c] = sd;
                            rs[c] = sg;
                            rm[c] = mg;
                        }
                    }

                    // Vertical reductions, weights and accumulation.
                    for (int r = 0; r < rows; ++r) {
                        const double* own = src.row_ptr(r0 + r + pad_r) + pad_r;
                        const double* cand = src.row_ptr(r0 + r + pad_r + dy) + pad_r + dx;
                        double* acc = s.acc.data() + static_cast<std::size_t>(r) * w;
                        double* norm = s.norm.data() + static_cast<std::size_t>(r) * w;
                        double* wmax = s.wmax.data() + static_cast<std::size_t>(r) * w;
                        for (int c = 0; c < w; ++c) {
                            double dist = 0.0;
                            double gsum = 0.0;
                            double gmax = 0.0;
                            for (int k = 0; k < m; ++k) {
                                const std::size_t idx = static_cast<std::size_t>(r + k) * w + c;
                                dist += s.row_dist[idx];
                                gsum += s.row_sum[idx];
                                gmax = std::max(gmax, s.row_max[idx]);
                            }
                            const double factor =
                                p.use_eta ? eta_from_reductions(gsum, gmax, m) : 1.0;
                            const double wt = std::exp(-(dist * dist_scale) * factor * inv_h2);
                            acc[c] += wt * (cand[c] - own[c]);
                            norm[c] += wt;
                            wmax[c] = std::max(wmax[c], wt);
                        }
                    }
                }
            }

            for (int r = 0; r < rows; ++r) {
                const double* self = noisy.row_ptr(r0 + r);
                double* dst = out.row_ptr(r0 + r);
                for (int c = 0; c < w; ++c) {
                    const std::size_t idx = static_cast<std::size_t>(r) * w + c;
                    const double sw = multiplier * s.wmax[idx];
                    const double k = s.norm[idx] + sw;
                    dst[c] = k > 0.0 ? self[c] + s.acc[idx] / k : self[c];
                }
            }
        }
    }
    return out;
}

}  // namespace mhnlm
