// Serial reference kernels against the OpenMP kernels on synthetic inputs.
// Thread count follows OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include <random>

#include "mhnlm/pipeline.hpp"

using namespace mhnlm;

namespace {

ImageGrid random_image(int n, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    ImageGrid img(n, n);
    for (double& v : img.pixels()) v = dist(gen);
    return img;
}

BlockNlmParams band_params() { return BlockNlmParams::with_patch(9, 15, 6.0 * 20.0 * 9.0); }

ModNlmParams stage2_params() {
    ModNlmParams p;
    p.sigma = 20.0;
    p.h = 3.87 * 20.0;
    return p;
}

void BM_BlockNlmSerial(benchmark::State& st) {
    const ImageGrid band = random_image(static_cast<int>(st.range(0)), 1, -30.0, 30.0);
    for (auto _ : st) benchmark::DoNotOptimize(serial::denoise_band(band, band_params()));
    st.SetItemsProcessed(st.iterations() * st.range(0) * st.range(0));
}

void BM_BlockNlmParallel(benchmark::State& st) {
    const ImageGrid band = random_image(static_cast<int>(st.range(0)), 1, -30.0, 30.0);
    for (auto _ : st) benchmark::DoNotOptimize(denoise_band(band, band_params()));
    st.SetItemsProcessed(st.iterations() * st.range(0) * st.range(0));
}

void BM_ModifiedNlmSerial(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const ImageGrid noisy = random_image(n, 2, 0.0, 255.0);
    const ImageGrid ref = random_image(n, 3, 0.0, 255.0);
    for (auto _ : st) benchmark::DoNotOptimize(serial::denoise(noisy, ref, stage2_params()));
    st.SetItemsProcessed(st.iterations() * n * n);
}

void BM_ModifiedNlmParallel(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const ImageGrid noisy = random_image(n, 2, 0.0, 255.0);
    const ImageGrid ref = random_image(n, 3, 0.0, 255.0);
    for (auto _ : st) benchmark::DoNotOptimize(denoise(noisy, ref, stage2_params()));
    st.SetItemsProcessed(st.iterations() * n * n);
}

void BM_Pipeline(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const ImageGrid noisy = random_image(n, 4, 0.0, 255.0);
    for (auto _ : st) benchmark::DoNotOptimize(denoise_full(noisy, DenoiseParams::defaults(20.0)));
    st.SetItemsProcessed(st.iterations() * n * n);
}

}  // namespace

BENCHMARK(BM_BlockNlmSerial)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlockNlmParallel)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ModifiedNlmSerial)->Arg(48)->Arg(96)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ModifiedNlmParallel)->Arg(48)->Arg(96)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Pipeline)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
