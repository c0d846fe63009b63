#include <algorithm>

#include "mhnlm/block_nlm.hpp"

namespace mhnlm::serial {

ImageGrid denoise_band(const ImageGrid& band, const BlockNlmParams& p) {
    p.validate();
    const int pad_r = p.padding();
    const ImageGrid padded = pad(band, pad_r);
    const SpatialKernel kernel = SpatialKernel::gaussian(p.patch_side, p.alpha);
    const int half = p.patch_side / 2;
    const int whalf = p.window_side / 2;

    ImageGrid sum(band.width(), band.height(), 0.0);
    ImageGrid count(band.width(), band.height(), 0.0);

    for (const int r : block_lattice(band.height(), p.block_step)) {
        for (const int c : block_lattice(band.width(), p.block_step)) {
            const Coord ci{r + pad_r, c + pad_r};
            const Patch center = extract_patch(padded, ci, p.patch_side);

            std::vector<std::pair<double, Patch>> weighted;
            double wmax = 0.0;
            for (int dy = -whalf; dy <= whalf; ++dy) {
                for (int dx = -whalf; dx <= whalf; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    Patch other = extract_patch(padded, {ci.row + dy, ci.col + dx}, p.patch_side);
                    const double dist = distance_scale(p.distance, p.patch_side) *
                                        patch_distance_weighted(center, other, kernel);
                    const double w = nlm_weight(dist, p.h);
                    wmax = std::max(wmax, w);
                    weighted.emplace_back(w, std::move(other));
                }
            }

            // Block estimate minus the block's own patch.
            std::vector<double> estimate(center.values.size(), 0.0);
            if (wmax > 0.0) {
                double norm = wmax;
                for (const auto& [w, patch] : weighted) {
                    norm += w;
                    for (std::size_t e = 0; e < estimate.size(); ++e) {
                        estimate[e] += w * (patch.values[e] - center.values[e]);
                    }
                }
                for (double& v : estimate) v /= norm;
            }

            for (int k = -half; k <= half; ++k) {
                for (int l = -half; l <= half; ++l) {
                    const int y = r + k;
                    const int x = c + l;
                    if (y < 0 || y >= band.height() || x < 0 || x >= band.width()) continue;
                    sum(y, x) += estimate[static_cast<std::size_t>(k + half) * p.patch_side + (l + half)];
                    count(y, x) += 1.0;
                }
            }
        }
    }

    for (int y = 0; y < band.height(); ++y) {
        for (int x = 0; x < band.width(); ++x) sum(y, x) = band(y, x) + sum(y, x) / count(y, x);
    }
    return sum;
}

}  // namespace mhnlm::serial
