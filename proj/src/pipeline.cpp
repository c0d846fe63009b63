#include "mhnlm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace mhnlm {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct Moments {
    double min = 0, max = 0, variance = 0;
};

Moments moments(const ImageGrid& img) {
    const auto px = img.pixels();
    const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
    const double mean = std::accumulate(px.begin(), px.end(), 0.0) / static_cast<double>(px.size());
    double var = 0.0;
    for (double v : px) var += (v - mean) * (v - mean);
    return {*lo, *hi, var / static_cast<double>(px.size())};
}

void emit(const PipelineHook& hook, const PipelineEvent& e) {
    if (hook) hook(e);
}

}  // namespace

DenoiseParams DenoiseParams::defaults(double sigma) {
    DenoiseParams p;
    p.sigma = sigma;
    return p;
}

BlockNlmParams DenoiseParams::stage1(int level) const {
    BlockNlmParams b = BlockNlmParams::with_patch(patch1, window1, h1_factor * sigma);
    if (alpha1 > 0.0) b.alpha = alpha1;
    if (block_step > 0) b.block_step = block_step;
    b.distance = distance;
    if (level >= 1 && static_cast<std::size_t>(level) <= band_h_scale.size()) {
        b.h *= band_h_scale[level - 1];
    }
    return b;
}

ModNlmParams DenoiseParams::stage2() const {
    ModNlmParams m;
    m.patch_side = patch2;
    m.window_side = window2;
    m.h = h2_factor * sigma;
    m.sigma = sigma;
    m.self_weight_boost = boost;
    m.boost_sigma_max = boost_sigma_max;
    m.distance = distance;
    m.use_eta = use_eta;
    m.unit_normals = unit_normals;
    return m;
}

void DenoiseParams::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InvalidArgument("denoise: sigma > 0 violated");
    }
    if (levels < 1) throw InvalidArgument("denoise: levels >= 1 violated");
    for (double s : band_h_scale) {
        if (!(s > 0.0)) throw InvalidArgument("denoise: band h scale must be > 0");
    }
    for (int j = 1; j <= levels; ++j) stage1(j).validate();
    stage2().validate();
}

ImageGrid pre_denoise(const ImageGrid& noisy, const DenoiseParams& p, const PipelineHook& hook,
                      std::vector<BandStats>* stats, StageTimings* timings) {
    p.validate();
    const WaveletFilters filters = WaveletFilters::make(p.wavelet);

    auto t0 = Clock::now();
    WaveletPyramid pyr = forward(noisy, p.levels, filters);
    const double forward_ms = ms_since(t0);
    emit(hook, {PipelineEvent::Kind::StageFinished, "forward", 0, Orientation::X, forward_ms, 1.0});

    t0 = Clock::now();
    for (int j = 1; j <= pyr.levels(); ++j) {
        const BlockNlmParams bp = p.stage1(j);
        for (Orientation o : {Orientation::X, Orientation::Y, Orientation::XY}) {
            const auto tb = Clock::now();
            ImageGrid& band = pyr.details[j - 1].band(o);
            const Moments before = moments(band);
            band = denoise_band(band, bp);
            if (stats) {
                const Moments after = moments(band);
                stats->push_back({j, o, before.min, before.max, before.variance, after.min,
                                  after.max, after.variance});
            }
            emit(hook, {PipelineEvent::Kind::BandFiltered, "bands", j, o, ms_since(tb), 1.0});
        }
    }
    const double band_ms = ms_since(t0);
    emit(hook, {PipelineEvent::Kind::StageFinished, "bands", 0, Orientation::X, band_ms, 1.0});

    t0 = Clock::now();
    ImageGrid reference = inverse(pyr, filters);
    const double inverse_ms = ms_since(t0);
    emit(hook, {PipelineEvent::Kind::StageFinished, "inverse", 0, Orientation::X, inverse_ms, 1.0});

    if (timings) {
        timings->forward_ms = forward_ms;
        timings->band_filter_ms = band_ms;
        timings->inverse_ms = inverse_ms;
    }
    return reference;
}

StageOutputs denoise_full(const ImageGrid& noisy, const DenoiseParams& p, const PipelineHook& hook) {
    const auto start = Clock::now();
    StageOutputs out;
    out.pre_denoised = pre_denoise(noisy, p, hook, &out.band_stats, &out.timings);

    const ModNlmParams mp = p.stage2();
    out.self_weight_multiplier = self_weight_multiplier(mp);
    const ImageGrid& reference =
        p.stage2_reference == ReferenceSource::PreDenoised ? out.pre_denoised : noisy;

    const auto t0 = Clock::now();
    out.final = denoise(noisy, reference, mp);
    out.timings.stage2_ms = ms_since(t0);
    emit(hook, {PipelineEvent::Kind::StageFinished, "stage2", 0, Orientation::X,
                out.timings.stage2_ms, out.self_weight_multiplier});
    out.timings.total_ms = ms_since(start);
    return out;
}

}  // namespace mhnlm
