#include "mhnlm/dswt.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

namespace mhnlm {
namespace {

// Compressed rows: row k of a 1-D linear operator is the list of
// (input index, weight) pairs that produce output sample k.
struct SparseRows {
    std::vector<int> start;  // size n+1
    std::vector<int> index;
    std::vector<double> weight;

    int rows() const { return static_cast<int>(start.size()) - 1; }
};

int extend_index(int i, int n, Extension ext) {
    if (ext == Extension::Periodic) return ((i % n) + n) % n;
    return mirror_index(i, n);
}

// Level filter upsampled by `step`, applied with the given extension. Taps
// that fold onto the same input sample are merged.
SparseRows filter_rows(const std::vector<double>& taps, int step, int n, Extension ext) {
    const int len = static_cast<int>(taps.size());
    const int center = (len - 1) / 2;
    SparseRows rows;
    rows.start.reserve(n + 1);
    rows.start.push_back(0);
    std::vector<std::pair<int, double>> entries;
    for (int k = 0; k < n; ++k) {
        entries.clear();
        for (int t = 0; t < len; ++t) {
            const int p = extend_index(k + (t - center) * step, n, ext);
            auto it = std::find_if(entries.begin(), entries.end(),
                                   [p](const auto& e) { return e.first == p; });
            if (it == entries.end()) {
                entries.emplace_back(p, taps[t]);
            } else {
                it->second += taps[t];
            }
        }
        std::sort(entries.begin(), entries.end());
        for (const auto& [p, w] : entries) {
            rows.index.push_back(p);
            rows.weight.push_back(w);
        }
        rows.start.push_back(static_cast<int>(rows.index.size()));
    }
    return rows;
}

SparseRows transpose(const SparseRows& a, int n) {
    std::vector<std::vector<std::pair<int, double>>> cols(n);
    for (int k = 0; k < a.rows(); ++k) {
        for (int e = a.start[k]; e < a.start[k + 1]; ++e) {
            cols[a.index[e]].emplace_back(k, a.weight[e]);
        }
    }
    SparseRows t;
    t.start.push_back(0);
    for (auto& col : cols) {
        std::sort(col.begin(), col.end());
        for (const auto& [k, w] : col) {
            t.index.push_back(k);
            t.weight.push_back(w);
        }
        t.start.push_back(static_cast<int>(t.index.size()));
    }
    return t;
}

using SparseMatrix = Eigen::SparseMatrix<double>;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Analysis pair (low, high) along one axis at one level, with the factored
// Gram matrix low^T low + high^T high used for the least-squares inverse.
struct AxisBank {
    int n = 0;
    SparseRows low, high, low_t, high_t;
    Eigen::SimplicialLLT<SparseMatrix> gram;

    AxisBank(const WaveletFilters& f, int level, int length, Extension ext) : n(length) {
        const int step = 1 << (level - 1);
        low = filter_rows(f.lowpass, step, n, ext);
        high = filter_rows(f.highpass, step, n, ext);
        low_t = transpose(low, n);
        high_t = transpose(high, n);

        std::vector<Eigen::Triplet<double>> triplets;
        for (const SparseRows* op : {&low, &high}) {
            for (int k = 0; k < n; ++k) {
                for (int a = op->start[k]; a < op->start[k + 1]; ++a) {
                    for (int b = op->start[k]; b < op->start[k + 1]; ++b) {
                        triplets.emplace_back(op->index[a], op->index[b],
                                              op->weight[a] * op->weight[b]);
                    }
                }
            }
        }
        SparseMatrix m(n, n);
        m.setFromTriplets(triplets.begin(), triplets.end());
        gram.compute(m);
        if (gram.info() != Eigen::Success) {
            throw InvalidArgument("dswt: analysis filter bank is not invertible at this size");
        }
    }
};

// out(r, k) = sum_p op[k](p) * img(r, p)
ImageGrid apply_along_x(const SparseRows& op, const ImageGrid& img) {
    ImageGrid out(img.width(), img.height());
    const int w = img.width();
#pragma omp parallel for schedule(static)
    for (int r = 0; r < img.height(); ++r) {
        const double* src = img.row_ptr(r);
        double* dst = out.row_ptr(r);
        for (int k = 0; k < w; ++k) {
            double acc = 0.0;
            for (int e = op.start[k]; e < op.start[k + 1]; ++e) acc += op.weight[e] * src[op.index[e]];
            dst[k] = acc;
        }
    }
    return out;
}

// out(k, c) = sum_p op[k](p) * img(p, c)
ImageGrid apply_along_y(const SparseRows& op, const ImageGrid& img) {
    ImageGrid out(img.width(), img.height(), 0.0);
    const int w = img.width();
#pragma omp parallel for schedule(static)
    for (int k = 0; k < img.height(); ++k) {
        double* dst = out.row_ptr(k);
        for (int e = op.start[k]; e < op.start[k + 1]; ++e) {
            const double wt = op.weight[e];
            const double* src = img.row_ptr(op.index[e]);
            for (int c = 0; c < w; ++c) dst[c] += wt * src[c];
        }
    }
    return out;
}

ImageGrid sum(ImageGrid a, const ImageGrid& b) {
    auto pa = a.pixels();
    auto pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) pa[i] += pb[i];
    return a;
}

ImageGrid solve_along_x(const AxisBank& bank, const ImageGrid& rhs) {
    Eigen::Map<const RowMajorMatrix> b(rhs.pixels().data(), rhs.height(), rhs.width());
    const Eigen::MatrixXd z = bank.gram.solve(b.transpose());
    ImageGrid out(rhs.width(), rhs.height());
    Eigen::Map<RowMajorMatrix>(out.pixels().data(), out.height(), out.width()) = z.transpose();
    return out;
}

ImageGrid solve_along_y(const AxisBank& bank, const ImageGrid& rhs) {
    Eigen::Map<const RowMajorMatrix> b(rhs.pixels().data(), rhs.height(), rhs.width());
    const Eigen::MatrixXd z = bank.gram.solve(Eigen::MatrixXd(b));
    ImageGrid out(rhs.width(), rhs.height());
    Eigen::Map<RowMajorMatrix>(out.pixels().data(), out.height(), out.width()) = z;
    return out;
}

constexpr int kRefinementSteps = 2;

// One analysis level: returns the approximation, fills the three details.
ImageGrid analyze(const AxisBank& bx, const AxisBank& by, const ImageGrid& img, DetailLevel& d) {
    const ImageGrid lo_x = apply_along_x(bx.low, img);
    const ImageGrid hi_x = apply_along_x(bx.high, img);
    d.x = apply_along_y(by.low, hi_x);
    d.y = apply_along_y(by.high, lo_x);
    d.xy = apply_along_y(by.high, hi_x);
    return apply_along_y(by.low, lo_x);
}

// Least-squares inverse of one level via the normal equations.
ImageGrid synthesize(const AxisBank& bx, const AxisBank& by, const ImageGrid& approx,
                     const DetailLevel& d) {
    const ImageGrid lo_x =
        solve_along_y(by, sum(apply_along_y(by.low_t, approx), apply_along_y(by.high_t, d.y)));
    const ImageGrid hi_x =
        solve_along_y(by, sum(apply_along_y(by.low_t, d.x), apply_along_y(by.high_t, d.xy)));
    return solve_along_x(bx, sum(apply_along_x(bx.low_t, lo_x), apply_along_x(bx.high_t, hi_x)));
}

ImageGrid difference(ImageGrid a, const ImageGrid& b) {
    auto pa = a.pixels();
    auto pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) pa[i] -= pb[i];
    return a;
}

void check_levels(int width, int height, int levels, const WaveletFilters& filters) {
    if (levels < 1) throw InvalidArgument("dswt: level count must be >= 1");
    const int limit = max_levels(width, height, filters);
    if (levels > limit) {
        throw InvalidArgument("dswt: J=" + std::to_string(levels) + " too large for " +
                              std::to_string(width) + "x" + std::to_string(height) + " with " +
                              std::string(to_string(filters.id)) + " (max " +
                              std::to_string(limit) + ")");
    }
}

}  // namespace

std::string_view to_string(WaveletId id) noexcept {
    switch (id) {
        case WaveletId::Haar: return "haar";
        case WaveletId::Db2: return "db2";
        case WaveletId::Db4: return "db4";
    }
    return "unknown";
}

WaveletId parse_wavelet(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "haar" || lower == "db1") return WaveletId::Haar;
    if (lower == "db2") return WaveletId::Db2;
    if (lower == "db4") return WaveletId::Db4;
    throw InvalidArgument("unknown wavelet '" + std::string(name) + "' (expected haar, db2, db4)");
}

WaveletFilters WaveletFilters::make(WaveletId id) {
    WaveletFilters f;
    f.id = id;
    switch (id) {
        case WaveletId::Haar: {
            const double a = 1.0 / std::sqrt(2.0);
            f.lowpass = {a, a};
            break;
        }
        case WaveletId::Db2: {
            const double s3 = std::sqrt(3.0);
            const double d = 4.0 * std::sqrt(2.0);
            f.lowpass = {(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d};
            break;
        }
        case WaveletId::Db4:
            f.lowpass = {0.23037781330885523,  0.7148465705525415,  0.6308807679295904,
                         -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
                         0.032883011666982945, -0.010597401784997278};
            break;
    }
    const int len = f.length();
    f.highpass.resize(len);
    for (int n = 0; n < len; ++n) {
        f.highpass[n] = (n % 2 == 0 ? 1.0 : -1.0) * f.lowpass[len - 1 - n];
    }
    return f;
}

ImageGrid& DetailLevel::band(Orientation o) noexcept {
    return o == Orientation::X ? x : o == Orientation::Y ? y : xy;
}
const ImageGrid& DetailLevel::band(Orientation o) const noexcept {
    return o == Orientation::X ? x : o == Orientation::Y ? y : xy;
}

int max_levels(int width, int height, const WaveletFilters& filters) {
    const int extent = std::min(width, height);
    int levels = 0;
    while ((1LL << levels) * (filters.length() - 1) < extent) ++levels;
    return levels;
}

WaveletPyramid forward(const ImageGrid& img, int levels, const WaveletFilters& filters,
                       Extension ext) {
    check_levels(img.width(), img.height(), levels, filters);
    WaveletPyramid pyr;
    pyr.wavelet = filters.id;
    pyr.extension = ext;
    ImageGrid current = img;
    for (int j = 1; j <= levels; ++j) {
        const AxisBank bx(filters, j, img.width(), ext);
        const AxisBank by(filters, j, img.height(), ext);
        DetailLevel level;
        current = analyze(bx, by, current, level);
        pyr.details.push_back(std::move(level));
    }
    pyr.approx = std::move(current);
    return pyr;
}

ImageGrid inverse(const WaveletPyramid& pyr, const WaveletFilters& filters) {
    if (pyr.levels() < 1) throw InvalidArgument("inverse: empty pyramid");
    if (pyr.wavelet != filters.id) throw InvalidArgument("inverse: wavelet mismatch");
    const int w = pyr.width();
    const int h = pyr.height();
    for (const DetailLevel& level : pyr.details) {
        for (const ImageGrid* band : {&level.x, &level.y, &level.xy}) {
            if (band->width() != w || band->height() != h) {
                throw InvalidArgument("inverse: band dimensions differ from approximation band");
            }
        }
    }
    check_levels(w, h, pyr.levels(), filters);

    ImageGrid current = pyr.approx;
    for (int j = pyr.levels(); j >= 1; --j) {
        const DetailLevel& level = pyr.details[j - 1];
        const AxisBank bx(filters, j, w, pyr.extension);
        const AxisBank by(filters, j, h, pyr.extension);
        ImageGrid x = synthesize(bx, by, current, level);
        // The normal equations square the condition number of the analysis
        // operator. Refinement on the band-space residual brings the error
        // back to the conditioning of the operator itself.
        for (int pass = 0; pass < kRefinementSteps; ++pass) {
            DetailLevel r;
            const ImageGrid ra = difference(current, analyze(bx, by, x, r));
            r.x = difference(level.x, r.x);
            r.y = difference(level.y, r.y);
            r.xy = difference(level.xy, r.xy);
            x = sum(std::move(x), synthesize(bx, by, ra, r));
        }
        current = std::move(x);
    }
    return current;
}

void dump_pyramid(const WaveletPyramid& pyr, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json sidecar;
    sidecar["wavelet"] = std::string(to_string(pyr.wavelet));
    sidecar["levels"] = pyr.levels();
    auto emit = [&](const ImageGrid& band, const std::string& name) {
        const auto [lo, hi] = std::minmax_element(band.pixels().begin(), band.pixels().end());
        const double span = *hi - *lo;
        ImageGrid scaled = band;
        for (double& v : scaled.pixels()) v = span > 0.0 ? 255.0 * (v - *lo) / span : 0.0;
        write_image(scaled, dir / (name + ".pgm"));
        sidecar["bands"][name] = {{"min", *lo}, {"max", *hi}};
    };
    for (int j = 1; j <= pyr.levels(); ++j) {
        const DetailLevel& level = pyr.details[j - 1];
        emit(level.x, "W" + std::to_string(j) + "_x");
        emit(level.y, "W" + std::to_string(j) + "_y");
        emit(level.xy, "W" + std::to_string(j) + "_xy");
    }
    emit(pyr.approx, "S" + std::to_string(pyr.levels()));
    std::ofstream out(dir / "bands.json");
    out << sidecar.dump(2) << '\n';
    if (!out) throw ImageIoError(ImageIoError::Kind::WriteFailed, (dir / "bands.json").string());
}

}  // namespace mhnlm
