#include "mhnlm/modified_nlm.hpp"

namespace mhnlm::serial {

ImageGrid denoise(const ImageGrid& noisy, const ImageGrid& reference, const ModNlmParams& p) {
    p.validate();
    if (!noisy.same_shape(reference)) {
        throw InvalidArgument("modified_nlm: noisy and reference dimensions differ");
    }
    const int pad_r = p.padding();
    const ImageGrid ref = pad(reference, pad_r);
    const ImageGrid src = pad(noisy, pad_r);
    GradientField grad = extended_gradient(reference, pad_r);
    if (p.unit_normals) grad = unit_normals(grad);

    ImageGrid out(noisy.width(), noisy.height());
    for (int r = 0; r < noisy.height(); ++r) {
        for (int c = 0; c < noisy.width(); ++c) {
            const Coord i{r + pad_r, c + pad_r};
            const WeightRow row = weight_row(ref, grad, i, p);
            if (!(row.normalizer > 0.0)) {
                out(r, c) = noisy(r, c);
                continue;
            }
            // Deviations from the center value: the self term contributes 0.
            const double own = src(i.row, i.col);
            double acc = 0.0;
            for (const WeightEntry& e : row.entries) acc += e.weight * (src(e.j.row, e.j.col) - own);
            out(r, c) = own + acc / row.normalizer;
        }
    }
    return out;
}

}  // namespace mhnlm::serial
