/**
 * @file pipeline.hpp
 * @brief Two-stage hybrid denoiser.
 *
 *  1. Stationary wavelet decomposition of the noisy image to level J.
 *  2. Blockwise NLM on each of the 3J detail bands (approximation untouched).
 *  3. Inverse transform -> pre-denoised reference.
 *  4. Modified NLM of the noisy image, weights taken from the reference.
 */
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mhnlm/block_nlm.hpp"
#include "mhnlm/dswt.hpp"
#include "mhnlm/image.hpp"
#include "mhnlm/modified_nlm.hpp"

namespace mhnlm {

/// Which image stage 2 reads its patches and gradients from.
enum class ReferenceSource { PreDenoised, Noisy };

struct DenoiseParams {
    double sigma = 0.0;
    int levels = 2;
    WaveletId wavelet = WaveletId::Db2;

    int patch1 = 9;
    int window1 = 15;
    double h1_factor = 6.0;
    double alpha1 = 0.0;  ///< 0 selects (patch1 - 1) / 4
    int block_step = 0;   ///< 0 selects patch1 / 2
    /// Per-level multiplier on stage-1 h (index j-1). Missing entries are 1.
    std::vector<double> band_h_scale;

    int patch2 = 7;
    int window2 = 15;
    double h2_factor = 3.87;
    double boost = 4.0 / 3.0;
    double boost_sigma_max = 20.0;
    DistanceConvention distance = DistanceConvention::Raw;  ///< both stages
    bool use_eta = true;
    bool unit_normals = false;
    ReferenceSource stage2_reference = ReferenceSource::PreDenoised;

    static DenoiseParams defaults(double sigma);

    /// Stage-1 parameters for detail level j (1-based).
    BlockNlmParams stage1(int level) const;
    ModNlmParams stage2() const;

    /// Checks both stages; throws InvalidArgument naming the invariant.
    void validate() const;
};

struct BandStats {
    int level = 0;
    Orientation orientation = Orientation::X;
    double min_before = 0, max_before = 0, variance_before = 0;
    double min_after = 0, max_after = 0, variance_after = 0;
};

struct StageTimings {
    double forward_ms = 0;
    double band_filter_ms = 0;
    double inverse_ms = 0;
    double stage2_ms = 0;
    double total_ms = 0;
    friend bool operator==(const StageTimings&, const StageTimings&) = default;
};

struct StageOutputs {
    ImageGrid pre_denoised;
    ImageGrid final;
    std::vector<BandStats> band_stats;
    StageTimings timings;
    double self_weight_multiplier = 1.0;
};

struct PipelineEvent {
    enum class Kind { BandFiltered, StageFinished };
    Kind kind = Kind::StageFinished;
    std::string stage;  ///< "forward", "bands", "inverse", "stage2"
    int level = 0;
    Orientation orientation = Orientation::X;
    double elapsed_ms = 0;
    double self_weight_multiplier = 1.0;  ///< set on the stage2 event
};

using PipelineHook = std::function<void(const PipelineEvent&)>;

/// Steps 1-3. Returns the pre-denoised reference image.
ImageGrid pre_denoise(const ImageGrid& noisy, const DenoiseParams& p,
                      const PipelineHook& hook = {}, std::vector<BandStats>* stats = nullptr,
                      StageTimings* timings = nullptr);

/// Steps 1-4.
StageOutputs denoise_full(const ImageGrid& noisy, const DenoiseParams& p,
                          const PipelineHook& hook = {});

}  // namespace mhnlm
