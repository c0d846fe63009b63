#include <doctest.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mhnlm/block_nlm.hpp"
#include "oracles.hpp"

using namespace mhnlm;

namespace {

Patch make_patch(int side, std::vector<double> v) { return Patch{side, std::move(v), {}}; }

BlockNlmParams params(int m, int w, double h, int step, DistanceConvention d = DistanceConvention::Normalized) {
    BlockNlmParams p = BlockNlmParams::with_patch(m, w, h);
    p.block_step = step;
    p.distance = d;
    return p;
}

oracle::BlockParams oracle_params(const BlockNlmParams& p) {
    return {p.patch_side, p.window_side, p.h, p.alpha, p.block_step,
            distance_scale(p.distance, p.patch_side)};
}

}  // namespace

TEST_CASE("SpatialKernel: normalized, positive, flip-symmetric") {
    for (int side : {3, 5, 7, 9}) {
        const SpatialKernel k = SpatialKernel::gaussian(side, (side - 1) / 4.0);
        CHECK(std::accumulate(k.weights.begin(), k.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
        for (int r = 0; r < side; ++r) {
            for (int c = 0; c < side; ++c) {
                CHECK(k(r, c) > 0.0);
                CHECK(k(r, c) == k(side - 1 - r, c));
                CHECK(k(r, c) == k(r, side - 1 - c));
                CHECK(k(r, c) == k(c, r));
            }
        }
        const auto ref = oracle::gaussian_kernel(side, (side - 1) / 4.0);
        for (std::size_t e = 0; e < ref.size(); ++e) CHECK(k.weights[e] == doctest::Approx(ref[e]).epsilon(1e-14));
    }
    CHECK_THROWS_AS(SpatialKernel::gaussian(4, 1.0), InvalidArgument);
    CHECK_THROWS_AS(SpatialKernel::gaussian(3, 0.0), InvalidArgument);
}

TEST_CASE("patch_distance_weighted: zero, constant offset, brute force") {
    const SpatialKernel k = SpatialKernel::gaussian(5, 1.0);
    const ImageGrid img = oracle::random_image(5, 5, 3);
    std::vector<double> a(img.pixels().begin(), img.pixels().end());
    CHECK(patch_distance_weighted(make_patch(5, a), make_patch(5, a), k) == 0.0);

    std::vector<double> b = a;
    for (double& v : b) v += 3.0;
    CHECK(patch_distance_weighted(make_patch(5, a), make_patch(5, b), k) == doctest::Approx(9.0).epsilon(1e-13));

    const ImageGrid other = oracle::random_image(5, 5, 4);
    std::vector<double> c(other.pixels().begin(), other.pixels().end());
    const auto g = oracle::gaussian_kernel(5, 1.0);
    double expected = 0.0;
    for (int r = 0; r < 5; ++r) {
        for (int col = 0; col < 5; ++col) {
            const double d = img(r, col) - other(r, col);
            expected += g[r * 5 + col] * d * d;
        }
    }
    CHECK(patch_distance_weighted(make_patch(5, a), make_patch(5, c), k) == doctest::Approx(expected).epsilon(1e-13));
    CHECK_THROWS_AS(patch_distance_weighted(make_patch(5, a), make_patch(3, std::vector<double>(9)), k),
                    InvalidArgument);
}

TEST_CASE("nlm_weight: definitional values") {
    CHECK(nlm_weight(0.0, 7.0) == 1.0);
    CHECK(nlm_weight(49.0, 7.0) == doctest::Approx(0.367879441171).epsilon(1e-11));
    CHECK(nlm_weight(4 * 49.0, 7.0) == doctest::Approx(0.018315638889).epsilon(1e-10));
}

TEST_CASE("block_lattice covers the last index") {
    CHECK(block_lattice(10, 4) == std::vector<int>{0, 4, 8, 9});
    CHECK(block_lattice(9, 4) == std::vector<int>{0, 4, 8});
    CHECK(block_lattice(1, 3) == std::vector<int>{0});
    CHECK(block_lattice(5, 1) == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("BlockNlmParams: defaults and invariants") {
    const BlockNlmParams p = BlockNlmParams::with_patch(9, 15, 120.0);
    CHECK(p.alpha == 2.0);
    CHECK(p.block_step == 4);
    CHECK(p.padding() == 11);
    CHECK_NOTHROW(p.validate());
    CHECK_THROWS_AS(params(4, 9, 1, 1).validate(), InvalidArgument);
    CHECK_THROWS_AS(params(9, 9, 1, 1).validate(), InvalidArgument);
    CHECK_THROWS_AS(params(3, 8, 1, 1).validate(), InvalidArgument);
    CHECK_THROWS_AS(params(3, 7, 0, 1).validate(), InvalidArgument);
    CHECK_THROWS_AS(params(3, 7, 1, 0).validate(), InvalidArgument);
    CHECK_THROWS_AS(params(3, 7, 1, 4).validate(), InvalidArgument);
    BlockNlmParams bad_alpha = params(3, 7, 1, 1);
    bad_alpha.alpha = -1;
    CHECK_THROWS_AS(bad_alpha.validate(), InvalidArgument);
    CHECK_THROWS_AS(denoise_band(ImageGrid(16, 16), params(4, 9, 1, 1)), InvalidArgument);
}

TEST_CASE("denoise_band: constant band is returned exactly") {
    for (double c : {0.0, 3.7, -12.25, 200.1}) {
        const ImageGrid band(20, 18, c);
        CHECK(denoise_band(band, params(5, 9, 4.0, 2)) == band);
        CHECK(serial::denoise_band(band, params(5, 9, 4.0, 2)) == band);
    }
}

TEST_CASE("denoise_band: matches the brute-force oracle") {
    for (int trial = 0; trial < 5; ++trial) {
        const ImageGrid band = oracle::random_image(16, 16, 1000 + trial, 0.0, 100.0);
        for (int m : {3, 5}) {
            for (int w : {7, 9}) {
                for (int step : {1, 2}) {
                    for (DistanceConvention d : {DistanceConvention::Normalized, DistanceConvention::Raw}) {
                        const double h = d == DistanceConvention::Raw ? 40.0 * m : 40.0;
                        const BlockNlmParams p = params(m, w, h, step, d);
                        const ImageGrid ref = oracle::block_nlm(band, oracle_params(p));
                        CHECK(oracle::max_abs_diff(denoise_band(band, p), ref) < 1e-10);
                        CHECK(oracle::max_abs_diff(serial::denoise_band(band, p), ref) < 1e-10);
                    }
                }
            }
        }
    }
}

TEST_CASE("denoise_band: non-square bands and the default stride") {
    const ImageGrid band = oracle::random_image(23, 17, 77, -30.0, 30.0);
    const BlockNlmParams p = BlockNlmParams::with_patch(5, 11, 25.0);
    CHECK(oracle::max_abs_diff(denoise_band(band, p), oracle::block_nlm(band, oracle_params(p))) < 1e-10);
}

TEST_CASE("denoise_band: output stays within the input range") {
    for (int trial = 0; trial < 4; ++trial) {
        const ImageGrid band = oracle::random_image(24, 24, 50 + trial, -40.0, 60.0);
        const auto [lo, hi] = std::minmax_element(band.pixels().begin(), band.pixels().end());
        const ImageGrid out = denoise_band(band, params(5, 11, 30.0, 2));
        for (double v : out.pixels()) {
            CHECK(v >= *lo - 1e-12);
            CHECK(v <= *hi + 1e-12);
        }
    }
}

TEST_CASE("denoise_band: bit-identical for 1, 2 and 8 threads") {
    const ImageGrid band = oracle::random_image(61, 45, 9, -50.0, 50.0);
    const BlockNlmParams p = params(5, 11, 30.0, 2);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const ImageGrid a = denoise_band(band, p);
    omp_set_num_threads(2);
    const ImageGrid b = denoise_band(band, p);
    omp_set_num_threads(8);
    const ImageGrid c = denoise_band(band, p);
    omp_set_num_threads(saved);
    CHECK(a == b);
    CHECK(a == c);
}

TEST_CASE("denoise_band: huge h gives the plain window mean of patches") {
    const ImageGrid band = oracle::random_image(16, 16, 31, 0.0, 50.0);
    const int m = 3, w = 7, step = 2;
    const ImageGrid out = denoise_band(band, params(m, w, 1e6, step));

    std::vector<double> sum(band.size(), 0.0), cnt(band.size(), 0.0);
    std::vector<int> lat = {0, 2, 4, 6, 8, 10, 12, 14, 15};
    for (int br : lat) {
        for (int bc : lat) {
            for (int k = -1; k <= 1; ++k) {
                for (int l = -1; l <= 1; ++l) {
                    double mean = 0.0;
                    for (int dy = -3; dy <= 3; ++dy) {
                        for (int dx = -3; dx <= 3; ++dx) mean += oracle::at(band, br + dy + k, bc + dx + l);
                    }
                    mean /= 49.0;
                    const int y = br + k, x = bc + l;
                    if (y < 0 || y >= 16 || x < 0 || x >= 16) continue;
                    sum[y * 16 + x] += mean;
                    cnt[y * 16 + x] += 1.0;
                }
            }
        }
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i) {
        worst = std::max(worst, std::abs(out.pixels()[i] - sum[i] / cnt[i]));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("denoise_band: a clean step edge survives") {
    ImageGrid step(40, 32);
    for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 40; ++c) step(r, c) = c < 20 ? 0.0 : 100.0;
    }
    const int m = 5;
    const ImageGrid out = denoise_band(step, params(m, 11, 10.0, 2));
    double worst = 0.0;
    for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 40; ++c) {
            if (std::abs(c - 19.5) < m) continue;
            const double target = c < 20 ? 0.0 : 100.0;
            worst = std::max(worst, std::abs(out(r, c) - target));
        }
    }
    CHECK(worst <= 5.0);
    MESSAGE("max deviation away from the edge: " << worst);
}
