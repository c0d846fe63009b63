#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "mhnlm/dswt.hpp"
#include "oracles.hpp"

using namespace mhnlm;

namespace {

const double kS = 1.0 / std::sqrt(2.0);
const std::vector<double> kHaarLow = {kS, kS};
const std::vector<double> kHaarHigh = {kS, -kS};

std::vector<double> db2_low() {
    const double r3 = std::sqrt(3.0);
    const double d = 4.0 * std::sqrt(2.0);
    return {(1 + r3) / d, (3 + r3) / d, (3 - r3) / d, (1 - r3) / d};
}

std::vector<double> qmf_high(const std::vector<double>& h) {
    std::vector<double> g(h.size());
    const int L = static_cast<int>(h.size());
    for (int n = 0; n < L; ++n) g[n] = (n % 2 ? -1.0 : 1.0) * h[L - 1 - n];
    return g;
}

double max_abs(const ImageGrid& a) {
    double m = 0.0;
    for (double v : a.pixels()) m = std::max(m, std::abs(v));
    return m;
}

ImageGrid cyclic_shift(const ImageGrid& img, int dy, int dx) {
    ImageGrid out(img.width(), img.height());
    const int w = img.width(), h = img.height();
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) out(((r + dy) % h + h) % h, ((c + dx) % w + w) % w) = img(r, c);
    }
    return out;
}

std::vector<double> upsample(const std::vector<double>& f, int step) {
    std::vector<double> out((f.size() - 1) * step + 1, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) out[i * step] = f[i];
    return out;
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

double norm2(const std::vector<double>& f) {
    return std::inner_product(f.begin(), f.end(), f.begin(), 0.0);
}

WaveletPyramid scaled_sum(double a, const WaveletPyramid& p, double b, const WaveletPyramid& q) {
    auto comb = [&](const ImageGrid& x, const ImageGrid& y) {
        ImageGrid out(x.width(), x.height());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out.pixels()[i] = a * x.pixels()[i] + b * y.pixels()[i];
        }
        return out;
    };
    WaveletPyramid out = p;
    for (std::size_t j = 0; j < p.details.size(); ++j) {
        out.details[j].x = comb(p.details[j].x, q.details[j].x);
        out.details[j].y = comb(p.details[j].y, q.details[j].y);
        out.details[j].xy = comb(p.details[j].xy, q.details[j].xy);
    }
    out.approx = comb(p.approx, q.approx);
    return out;
}

}  // namespace

TEST_CASE("filters: orthogonal QMF pairs") {
    for (WaveletId id : {WaveletId::Haar, WaveletId::Db2, WaveletId::Db4}) {
        const WaveletFilters f = WaveletFilters::make(id);
        CHECK(f.highpass == qmf_high(f.lowpass));
        CHECK(std::accumulate(f.lowpass.begin(), f.lowpass.end(), 0.0) ==
              doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
        CHECK(std::accumulate(f.highpass.begin(), f.highpass.end(), 0.0) ==
              doctest::Approx(0.0).epsilon(1e-14));
        CHECK(norm2(f.lowpass) == doctest::Approx(1.0).epsilon(1e-12));
        // Orthogonality to even shifts.
        for (int s = 2; s < f.length(); s += 2) {
            double acc = 0.0;
            for (int n = 0; n + s < f.length(); ++n) acc += f.lowpass[n] * f.lowpass[n + s];
            // The tabulated db4 taps are accurate to about 1e-13.
            CHECK(std::abs(acc) < 1e-12);
        }
    }
    const WaveletFilters db2 = WaveletFilters::make(WaveletId::Db2);
    const auto ref = db2_low();
    for (int i = 0; i < 4; ++i) CHECK(db2.lowpass[i] == doctest::Approx(ref[i]).epsilon(1e-15));
}

TEST_CASE("parse_wavelet") {
    CHECK(parse_wavelet("haar") == WaveletId::Haar);
    CHECK(parse_wavelet("DB2") == WaveletId::Db2);
    CHECK(parse_wavelet("db4") == WaveletId::Db4);
    CHECK_THROWS_AS(parse_wavelet("sym8"), InvalidArgument);
    CHECK(to_string(WaveletId::Db4) == "db4");
}

TEST_CASE("forward: constant image has zero details and a scaled approximation") {
    for (WaveletId id : {WaveletId::Haar, WaveletId::Db2, WaveletId::Db4}) {
        const WaveletFilters f = WaveletFilters::make(id);
        for (int J = 1; J <= 3; ++J) {
            const ImageGrid c(40, 36, 77.0);
            const WaveletPyramid p = forward(c, J, f);
            REQUIRE(p.levels() == J);
            for (const DetailLevel& d : p.details) {
                CHECK(max_abs(d.x) < 1e-11);
                CHECK(max_abs(d.y) < 1e-11);
                CHECK(max_abs(d.xy) < 1e-11);
            }
            const double expected = 77.0 * std::pow(2.0, J);
            for (double v : p.approx.pixels()) CHECK(v == doctest::Approx(expected).epsilon(1e-13));
        }
    }
}

TEST_CASE("forward: every band keeps the image size") {
    const ImageGrid img = oracle::random_image(33, 47, 3);
    const WaveletPyramid p = forward(img, 3, WaveletFilters::make(WaveletId::Db2));
    for (const DetailLevel& d : p.details) {
        for (Orientation o : {Orientation::X, Orientation::Y, Orientation::XY}) {
            CHECK(d.band(o).width() == 33);
            CHECK(d.band(o).height() == 47);
        }
    }
    CHECK(p.approx.same_shape(img));
}

TEST_CASE("forward: Haar impulse response matches direct convolution") {
    ImageGrid imp(16, 16, 0.0);
    imp(8, 8) = 1.0;
    const WaveletPyramid p = forward(imp, 1, WaveletFilters::make(WaveletId::Haar));
    // x band: highpass along x (columns), lowpass along y (rows).
    CHECK(oracle::max_abs_diff(p.details[0].x, oracle::correlate2d(imp, kHaarLow, kHaarHigh, 1)) < 1e-15);
    CHECK(oracle::max_abs_diff(p.details[0].y, oracle::correlate2d(imp, kHaarHigh, kHaarLow, 1)) < 1e-15);
    CHECK(oracle::max_abs_diff(p.details[0].xy, oracle::correlate2d(imp, kHaarHigh, kHaarHigh, 1)) < 1e-15);
    CHECK(oracle::max_abs_diff(p.approx, oracle::correlate2d(imp, kHaarLow, kHaarLow, 1)) < 1e-15);
    // Explicit values: taps at offsets 0 and +1, so the response sits at (7..8, 7..8).
    CHECK(p.details[0].xy(8, 8) == doctest::Approx(0.5));
    CHECK(p.details[0].xy(7, 7) == doctest::Approx(0.5));
    CHECK(p.details[0].xy(7, 8) == doctest::Approx(-0.5));
    CHECK(p.details[0].x(7, 7) == doctest::Approx(-0.5));
    CHECK(p.details[0].x(8, 8) == doctest::Approx(0.5));
}

TEST_CASE("forward: db2 two-level cascade matches direct convolution") {
    const ImageGrid img = oracle::random_image(24, 20, 4);
    const auto h = db2_low();
    const auto g = qmf_high(h);
    const WaveletPyramid p = forward(img, 2, WaveletFilters::make(WaveletId::Db2));
    const ImageGrid s1 = oracle::correlate2d(img, h, h, 1);
    CHECK(oracle::max_abs_diff(p.details[0].x, oracle::correlate2d(img, h, g, 1)) < 1e-11);
    CHECK(oracle::max_abs_diff(p.details[1].x, oracle::correlate2d(s1, h, g, 2)) < 1e-11);
    CHECK(oracle::max_abs_diff(p.details[1].y, oracle::correlate2d(s1, g, h, 2)) < 1e-11);
    CHECK(oracle::max_abs_diff(p.details[1].xy, oracle::correlate2d(s1, g, g, 2)) < 1e-11);
    CHECK(oracle::max_abs_diff(p.approx, oracle::correlate2d(s1, h, h, 2)) < 1e-11);
}

TEST_CASE("inverse: perfect reconstruction") {
    std::uint64_t seed = 100;
    for (WaveletId id : {WaveletId::Haar, WaveletId::Db2, WaveletId::Db4}) {
        const WaveletFilters f = WaveletFilters::make(id);
        for (auto [w, h] : {std::pair{64, 64}, std::pair{33, 47}, std::pair{50, 29}}) {
            for (int J = 1; J <= 3; ++J) {
                const ImageGrid img = oracle::random_image(w, h, seed++);
                CHECK(oracle::max_abs_diff(inverse(forward(img, J, f), f), img) < 1e-9);
            }
        }
    }
    const WaveletFilters db2 = WaveletFilters::make(WaveletId::Db2);
    for (int i = 0; i < 20; ++i) {
        const ImageGrid img = oracle::random_image(64, 64, 500 + i);
        CHECK(oracle::max_abs_diff(inverse(forward(img, 2, db2), db2), img) < 1e-9);
    }
}

TEST_CASE("inverse: periodic extension also reconstructs") {
    const WaveletFilters f = WaveletFilters::make(WaveletId::Db4);
    const ImageGrid img = oracle::random_image(48, 40, 9);
    CHECK(oracle::max_abs_diff(inverse(forward(img, 2, f, Extension::Periodic), f), img) < 1e-9);
}

TEST_CASE("inverse: zeroed details of a constant image") {
    const WaveletFilters f = WaveletFilters::make(WaveletId::Db2);
    const ImageGrid c(30, 30, 12.5);
    WaveletPyramid p = forward(c, 2, f);
    for (DetailLevel& d : p.details) {
        d.x = ImageGrid(30, 30, 0.0);
        d.y = ImageGrid(30, 30, 0.0);
        d.xy = ImageGrid(30, 30, 0.0);
    }
    CHECK(oracle::max_abs_diff(inverse(p, f), c) < 1e-9);
}

TEST_CASE("inverse: linear in the pyramid") {
    const WaveletFilters f = WaveletFilters::make(WaveletId::Db2);
    for (int i = 0; i < 5; ++i) {
        WaveletPyramid p1 = forward(oracle::random_image(32, 28, 20 + i), 2, f);
        WaveletPyramid p2 = forward(oracle::random_image(32, 28, 40 + i), 2, f);
        // Perturb so the pyramids are not in the range of forward().
        p1.details[0].x(3, 3) += 17.0;
        p2.approx(5, 7) -= 4.0;
        const double a = 0.3 + i, b = -1.7 + 0.5 * i;
        const ImageGrid lhs = inverse(scaled_sum(a, p1, b, p2), f);
        const ImageGrid r1 = inverse(p1, f);
        const ImageGrid r2 = inverse(p2, f);
        ImageGrid rhs(32, 28);
        for (std::size_t k = 0; k < rhs.size(); ++k) {
            rhs.pixels()[k] = a * r1.pixels()[k] + b * r2.pixels()[k];
        }
        CHECK(oracle::max_abs_diff(lhs, rhs) < 1e-9);
    }
}

TEST_CASE("forward: shift covariance under periodic extension") {
    const ImageGrid img = oracle::random_image(32, 32, 12);
    for (WaveletId id : {WaveletId::Haar, WaveletId::Db2, WaveletId::Db4}) {
        const WaveletFilters f = WaveletFilters::make(id);
        const WaveletPyramid base = forward(img, 2, f, Extension::Periodic);
        for (auto [dy, dx] : {std::pair{1, 0}, std::pair{0, 3}, std::pair{5, 7}}) {
            const WaveletPyramid shifted = forward(cyclic_shift(img, dy, dx), 2, f, Extension::Periodic);
            for (int j = 0; j < 2; ++j) {
                for (Orientation o : {Orientation::X, Orientation::Y, Orientation::XY}) {
                    CHECK(oracle::max_abs_diff(shifted.details[j].band(o),
                                               cyclic_shift(base.details[j].band(o), dy, dx)) < 1e-10);
                }
            }
            CHECK(oracle::max_abs_diff(shifted.approx, cyclic_shift(base.approx, dy, dx)) < 1e-10);
        }
    }
}

TEST_CASE("forward: detail bands have zero mean (periodic extension)") {
    for (WaveletId id : {WaveletId::Haar, WaveletId::Db2, WaveletId::Db4}) {
        const WaveletFilters f = WaveletFilters::make(id);
        const ImageGrid img = oracle::random_image(64, 64, 13);
        const WaveletPyramid p = forward(img, 3, f, Extension::Periodic);
        for (const DetailLevel& d : p.details) {
            for (Orientation o : {Orientation::X, Orientation::Y, Orientation::XY}) {
                const auto px = d.band(o).pixels();
                const double mean = std::accumulate(px.begin(), px.end(), 0.0) / px.size();
                double var = 0.0;
                for (double v : px) var += (v - mean) * (v - mean);
                CHECK(std::abs(mean) < 1e-6 * std::sqrt(var / px.size()));
            }
        }
    }
}

TEST_CASE("forward: white-noise band variance matches the level filter norms") {
    // Deep bands are strongly correlated, so pool several independent fields.
    std::vector<ImageGrid> fields;
    for (std::uint64_t seed : {77, 78, 79, 80}) {
        fields.push_back(add_awgn(ImageGrid(512, 512, 0.0), {20.0, seed}));
    }
    for (WaveletId id : {WaveletId::Haar, WaveletId::Db2, WaveletId::Db4}) {
        const WaveletFilters f = WaveletFilters::make(id);
        std::vector<WaveletPyramid> pyramids;
        for (const ImageGrid& n : fields) pyramids.push_back(forward(n, 3, f));
        std::vector<double> low_cascade = {1.0};
        for (int j = 1; j <= 3; ++j) {
            const int step = 1 << (j - 1);
            const auto hi = convolve(low_cascade, upsample(f.highpass, step));
            const auto lo = convolve(low_cascade, upsample(f.lowpass, step));
            const double nh = norm2(hi), nl = norm2(lo);
            const std::pair<Orientation, double> expected[] = {
                {Orientation::X, nh * nl}, {Orientation::Y, nl * nh}, {Orientation::XY, nh * nh}};
            for (const auto& [o, gain] : expected) {
                double sum = 0.0, sq = 0.0, count = 0.0;
                for (const WaveletPyramid& p : pyramids) {
                    for (double v : p.details[j - 1].band(o).pixels()) {
                        sum += v;
                        sq += v * v;
                        count += 1.0;
                    }
                }
                const double mean = sum / count;
                const double var = sq / count - mean * mean;
                CAPTURE(j);
                CHECK(var == doctest::Approx(400.0 * gain).epsilon(0.05));
            }
            low_cascade = lo;
        }
    }
}

TEST_CASE("forward: level limits") {
    const WaveletFilters db2 = WaveletFilters::make(WaveletId::Db2);
    CHECK(max_levels(16, 16, db2) == 3);  // 4*3 = 12 < 16, 8*3 = 24 >= 16
    const ImageGrid img(16, 16, 1.0);
    CHECK_NOTHROW(forward(img, 3, db2));
    CHECK_THROWS_AS(forward(img, 4, db2), InvalidArgument);
    CHECK_THROWS_AS(forward(img, 0, db2), InvalidArgument);
}

TEST_CASE("inverse: rejects inconsistent pyramids") {
    const WaveletFilters f = WaveletFilters::make(WaveletId::Db2);
    WaveletPyramid p = forward(oracle::random_image(20, 20, 3), 1, f);
    p.details[0].xy = ImageGrid(19, 20);
    CHECK_THROWS_AS(inverse(p, f), InvalidArgument);
}

TEST_CASE("forward/inverse: bit-identical across thread counts") {
    const WaveletFilters f = WaveletFilters::make(WaveletId::Db4);
    const ImageGrid img = oracle::random_image(97, 83, 21);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const WaveletPyramid a = forward(img, 3, f);
    const ImageGrid ra = inverse(a, f);
    omp_set_num_threads(4);
    const WaveletPyramid b = forward(img, 3, f);
    const ImageGrid rb = inverse(b, f);
    omp_set_num_threads(saved);
    for (int j = 0; j < 3; ++j) {
        CHECK(a.details[j].x == b.details[j].x);
        CHECK(a.details[j].y == b.details[j].y);
        CHECK(a.details[j].xy == b.details[j].xy);
    }
    CHECK(ra == rb);
}

TEST_CASE("dump_pyramid writes rescaled bands and their true ranges") {
    const auto dir = std::filesystem::temp_directory_path() / "mhnlm_test_dump";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const WaveletFilters f = WaveletFilters::make(WaveletId::Haar);
    const WaveletPyramid p = forward(oracle::random_image(16, 16, 5), 2, f);
    dump_pyramid(p, dir);
    std::ifstream in(dir / "bands.json");
    REQUIRE(in);
    const auto j = nlohmann::json::parse(in);
    int files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        files += entry.path().extension() == ".pgm";
    }
    CHECK(files == 7);
    const auto px = p.details[0].x.pixels();
    CHECK(j.at("bands").at("W1_x").at("min").get<double>() == *std::min_element(px.begin(), px.end()));
    CHECK(j.at("bands").at("W1_x").at("max").get<double>() == *std::max_element(px.begin(), px.end()));
    CHECK(j.at("bands").contains("S2"));
}
