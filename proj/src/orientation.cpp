#include "mhnlm/orientation.hpp"

#include <string>

namespace mhnlm {

GradientField gradient(const ImageGrid& img) {
    const int w = img.width();
    const int h = img.height();
    GradientField g{ImageGrid(w, h), ImageGrid(w, h)};
#pragma omp parallel for schedule(static)
    for (int r = 0; r < h; ++r) {
        const double* up = img.row_ptr(mirror_index(r - 1, h));
        const double* row = img.row_ptr(r);
        const double* down = img.row_ptr(mirror_index(r + 1, h));
        double* gx = g.gx.row_ptr(r);
        double* gy = g.gy.row_ptr(r);
        for (int c = 0; c < w; ++c) {
            gx[c] = (row[mirror_index(c + 1, w)] - row[mirror_index(c - 1, w)]) / 2.0;
            gy[c] = (down[c] - up[c]) / 2.0;
        }
    }
    return g;
}

GradientField extended_gradient(const ImageGrid& img, int radius) {
    // One extra ring so the outermost padded samples still see their true
    // mirrored neighbours.
    const GradientField wide = gradient(pad(img, radius + 1));
    return {crop(wide.gx, 1), crop(wide.gy, 1)};
}

GradientField unit_normals(const GradientField& field) {
    GradientField out = field;
    auto gx = out.gx.pixels();
    auto gy = out.gy.pixels();
    for (std::size_t i = 0; i < gx.size(); ++i) {
        const double norm = std::hypot(gx[i], gy[i]);
        if (norm > 0.0) {
            gx[i] /= norm;
            gy[i] /= norm;
        }
    }
    return out;
}

GammaPatch gamma(const GradientField& field, Coord i, Coord j, int side) {
    if (side < 1 || side % 2 == 0) throw InvalidArgument("gamma: side must be odd");
    if (!field.gx.same_shape(field.gy)) throw InvalidArgument("gamma: gx/gy shape mismatch");
    const int half = side / 2;
    auto inside = [&](Coord c) {
        return c.row - half >= 0 && c.col - half >= 0 && c.row + half < field.gx.height() &&
               c.col + half < field.gx.width();
    };
    if (!inside(i) || !inside(j)) {
        throw InvalidArgument("gamma: window exceeds gradient field bounds");
    }
    GammaPatch g{side, {}};
    g.values.reserve(static_cast<std::size_t>(side) * side);
    for (int k = -half; k <= half; ++k) {
        for (int l = -half; l <= half; ++l) {
            g.values.push_back(field.gx(i.row + k, i.col + l) * field.gx(j.row + k, j.col + l) +
                               field.gy(i.row + k, i.col + l) * field.gy(j.row + k, j.col + l));
        }
    }
    return g;
}

double eta(const GammaPatch& g) {
    if (g.side < 3 || g.values.size() != static_cast<std::size_t>(g.side) * g.side) {
        throw InvalidArgument("eta: gamma patch must be m x m with m >= 3");
    }
    double sum = 0.0;
    double max_abs = 0.0;
    for (double v : g.values) {
        sum += v;
        max_abs = std::max(max_abs, std::abs(v));
    }
    return eta_from_reductions(sum, max_abs, g.side);
}

}  // namespace mhnlm
