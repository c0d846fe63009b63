#include "mhnlm/report.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

namespace mhnlm {
namespace {

using nlohmann::json;

constexpr std::array<PublishedRow, 25> kPublished{{
    {"lena", 10, 35.93, 35.61, 35.47, 35.25, 35.40},
    {"lena", 15, 34.27, 33.90, 33.70, 33.68, 33.93},
    {"lena", 20, 33.05, 32.66, 32.38, 32.63, 32.75},
    {"lena", 25, 32.05, 31.69, 31.32, 31.55, 31.76},
    {"lena", 50, 28.86, 28.61, 27.79, 27.51, 28.47},
    {"barbara", 10, 34.98, 34.03, 34.42, 33.83, 33.80},
    {"barbara", 15, 33.11, 31.86, 32.37, 32.21, 32.35},
    {"barbara", 20, 31.78, 30.32, 30.83, 30.88, 31.13},
    {"barbara", 25, 30.72, 29.13, 29.60, 29.77, 30.07},
    {"barbara", 50, 27.17, 25.48, 25.47, 24.91, 26.41},
    {"boats", 10, 33.92, 33.58, 33.64, 33.18, 32.94},
    {"boats", 15, 32.14, 31.70, 31.73, 31.45, 31.52},
    {"boats", 20, 30.88, 30.38, 30.36, 30.16, 30.42},
    {"boats", 25, 29.91, 29.37, 29.28, 29.11, 29.43},
    {"boats", 50, 26.64, 26.38, 25.95, 25.13, 26.22},
    {"peppers", 10, 34.68, 33.77, 34.28, 33.87, 33.53},
    {"peppers", 15, 32.70, 31.74, 32.22, 32.06, 32.03},
    {"peppers", 20, 31.29, 30.31, 30.82, 30.75, 30.82},
    {"peppers", 25, 30.16, 29.21, 29.73, 29.77, 29.78},
    {"peppers", 50, 26.41, 25.90, 26.13, 23.84, 26.28},
    {"house", 10, 36.71, 35.35, 35.98, 35.67, 35.78},
    {"house", 15, 34.94, 33.64, 34.32, 34.23, 34.23},
    {"house", 20, 33.77, 32.39, 33.20, 33.24, 33.11},
    {"house", 25, 32.86, 31.40, 32.15, 32.30, 32.15},
    {"house", 50, 29.37, 28.26, 27.95, 27.64, 28.38},
}};

struct PublishedAverage {
    int sigma;
    double proposed;
};

constexpr std::array<PublishedAverage, 5> kPublishedAverages{{
    {10, 34.29}, {15, 32.81}, {20, 31.65}, {25, 30.63}, {50, 27.15},
}};

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool integral_sigma(double sigma, int& out) {
    const double r = std::round(sigma);
    if (std::abs(sigma - r) > 1e-9) return false;
    out = static_cast<int>(r);
    return true;
}

json optional_to_json(const std::optional<double>& v) {
    return v ? psnr_to_json(*v) : json(nullptr);
}

std::optional<double> optional_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return psnr_from_json(j);
}

int image_rank(const std::string& name) {
    for (std::size_t i = 0; i < std::size(kBenchImages); ++i) {
        if (name == kBenchImages[i]) return static_cast<int>(i);
    }
    return static_cast<int>(std::size(kBenchImages));
}

template <typename T>
T typed(const json& j, const std::string& key) {
    const json& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw InvalidArgument("config: '" + key + "' must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw InvalidArgument("config: '" + key + "' must be an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw InvalidArgument("config: '" + key + "' must be a number");
    } else {
        if (!v.is_string()) throw InvalidArgument("config: '" + key + "' must be a string");
    }
    return v.get<T>();
}

}  // namespace

std::span<const PublishedRow> published_table() { return kPublished; }

std::optional<double> published_psnr(std::string_view image, double sigma) {
    int s = 0;
    if (!integral_sigma(sigma, s)) return std::nullopt;
    const std::string name = lower(image);
    for (const PublishedRow& r : kPublished) {
        if (r.image == name && r.sigma == s) return r.proposed;
    }
    return std::nullopt;
}

std::optional<double> published_average(double sigma) {
    int s = 0;
    if (!integral_sigma(sigma, s)) return std::nullopt;
    for (const PublishedAverage& a : kPublishedAverages) {
        if (a.sigma == s) return a.proposed;
    }
    return std::nullopt;
}

void attach_published(BenchRun& run) {
    run.published_psnr = published_psnr(run.image, run.sigma);
    run.delta_to_published.reset();
    if (run.published_psnr) run.delta_to_published = run.psnr_final - *run.published_psnr;
}

std::vector<AggregateRow> aggregate(const std::vector<BenchRun>& runs) {
    std::map<double, std::pair<int, double>> acc;
    for (const BenchRun& r : runs) {
        auto& [n, sum] = acc[r.sigma];
        ++n;
        sum += r.psnr_final;
    }
    std::vector<AggregateRow> out;
    for (const auto& [sigma, ns] : acc) {
        AggregateRow a;
        a.sigma = sigma;
        a.images = ns.first;
        a.mean_final = ns.second / ns.first;
        a.published_mean = published_average(sigma);
        if (a.published_mean) a.delta_to_published = a.mean_final - *a.published_mean;
        out.push_back(a);
    }
    return out;
}

void finalize(BenchReport& report) {
    std::stable_sort(report.runs.begin(), report.runs.end(),
                     [](const BenchRun& a, const BenchRun& b) {
                         const int ra = image_rank(a.image);
                         const int rb = image_rank(b.image);
                         if (ra != rb) return ra < rb;
                         if (a.image != b.image) return a.image < b.image;
                         return a.sigma < b.sigma;
                     });
    report.aggregates = aggregate(report.runs);
}

json timings_to_json(const StageTimings& t) {
    return {{"forward_ms", t.forward_ms},       {"band_filter_ms", t.band_filter_ms},
            {"inverse_ms", t.inverse_ms},       {"stage2_ms", t.stage2_ms},
            {"total_ms", t.total_ms}};
}

StageTimings timings_from_json(const json& j) {
    StageTimings t;
    t.forward_ms = j.at("forward_ms").get<double>();
    t.band_filter_ms = j.at("band_filter_ms").get<double>();
    t.inverse_ms = j.at("inverse_ms").get<double>();
    t.stage2_ms = j.at("stage2_ms").get<double>();
    t.total_ms = j.at("total_ms").get<double>();
    return t;
}

json psnr_to_json(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double psnr_from_json(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw InvalidArgument("report: bad number '" + s + "'");
    }
    return j.get<double>();
}

json to_json(const BenchReport& report, bool include_run_info) {
    json runs = json::array();
    for (const BenchRun& r : report.runs) {
        json row = {{"image", r.image},
                    {"width", r.width},
                    {"height", r.height},
                    {"sigma", r.sigma},
                    {"seed", r.seed},
                    {"psnr_noisy", psnr_to_json(r.psnr_noisy)},
                    {"psnr_pre_denoised", psnr_to_json(r.psnr_pre)},
                    {"psnr_final", psnr_to_json(r.psnr_final)},
                    {"published_psnr", optional_to_json(r.published_psnr)},
                    {"delta_to_published", optional_to_json(r.delta_to_published)},
                    {"self_weight_multiplier", r.self_weight_multiplier}};
        if (include_run_info) row["timings"] = timings_to_json(r.timings);
        runs.push_back(std::move(row));
    }
    json aggregates = json::array();
    for (const AggregateRow& a : report.aggregates) {
        aggregates.push_back({{"sigma", a.sigma},
                              {"images", a.images},
                              {"mean_psnr_final", psnr_to_json(a.mean_final)},
                              {"published_mean_psnr", optional_to_json(a.published_mean)},
                              {"delta_to_published", optional_to_json(a.delta_to_published)}});
    }
    json j = {{"schema_version", report.schema_version},
              {"config", report.config},
              {"complete", report.complete},
              {"missing_images", report.missing_images},
              {"warnings", report.warnings},
              {"corpus_sha256", report.corpus_sha256},
              {"runs", std::move(runs)},
              {"aggregates", std::move(aggregates)}};
    if (include_run_info) j["threads"] = report.threads;
    return j;
}

BenchReport report_from_json(const json& j) {
    BenchReport r;
    try {
        r.schema_version = j.at("schema_version").get<int>();
        if (r.schema_version != kReportSchemaVersion) {
            throw InvalidArgument("report: unsupported schema_version " +
                                  std::to_string(r.schema_version));
        }
        r.config = j.at("config");
        r.complete = j.at("complete").get<bool>();
        r.missing_images = j.at("missing_images").get<std::vector<std::string>>();
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        r.corpus_sha256 = j.at("corpus_sha256").get<std::map<std::string, std::string>>();
        if (j.contains("threads")) r.threads = j.at("threads").get<int>();
        for (const json& row : j.at("runs")) {
            BenchRun b;
            b.image = row.at("image").get<std::string>();
            b.width = row.at("width").get<int>();
            b.height = row.at("height").get<int>();
            b.sigma = row.at("sigma").get<double>();
            b.seed = row.at("seed").get<std::uint64_t>();
            b.psnr_noisy = psnr_from_json(row.at("psnr_noisy"));
            b.psnr_pre = psnr_from_json(row.at("psnr_pre_denoised"));
            b.psnr_final = psnr_from_json(row.at("psnr_final"));
            b.published_psnr = optional_from_json(row.at("published_psnr"));
            b.delta_to_published = optional_from_json(row.at("delta_to_published"));
            b.self_weight_multiplier = row.at("self_weight_multiplier").get<double>();
            if (row.contains("timings")) b.timings = timings_from_json(row.at("timings"));
            r.runs.push_back(std::move(b));
        }
        for (const json& row : j.at("aggregates")) {
            AggregateRow a;
            a.sigma = row.at("sigma").get<double>();
            a.images = row.at("images").get<int>();
            a.mean_final = psnr_from_json(row.at("mean_psnr_final"));
            a.published_mean = optional_from_json(row.at("published_mean_psnr"));
            a.delta_to_published = optional_from_json(row.at("delta_to_published"));
            r.aggregates.push_back(a);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("report: ") + e.what());
    }
    return r;
}

std::string render_table(const BenchReport& report) {
    std::string out;
    char line[256];
    auto opt = [](const std::optional<double>& v, const char* fmt) {
        char buf[32];
        if (!v) return std::string("-");
        std::snprintf(buf, sizeof buf, fmt, *v);
        return std::string(buf);
    };
    std::snprintf(line, sizeof line, "%-10s %9s %5s %10s %8s %8s %8s %8s %7s %10s\n", "image",
                  "size", "sigma", "seed", "noisy", "pre", "final", "published", "delta", "total_ms");
    out += line;
    for (const BenchRun& r : report.runs) {
        const std::string size = std::to_string(r.width) + "x" + std::to_string(r.height);
        std::snprintf(line, sizeof line, "%-10s %9s %5g %10llu %8.2f %8.2f %8.2f %8s %7s %10.0f\n",
                      r.image.c_str(), size.c_str(), r.sigma,
                      static_cast<unsigned long long>(r.seed), r.psnr_noisy, r.psnr_pre,
                      r.psnr_final, opt(r.published_psnr, "%.2f").c_str(),
                      opt(r.delta_to_published, "%+.2f").c_str(), r.timings.total_ms);
        out += line;
    }
    out += "\n";
    std::snprintf(line, sizeof line, "%5s %6s %10s %10s %7s\n", "sigma", "images", "mean_final",
                  "published_mean", "delta");
    out += line;
    for (const AggregateRow& a : report.aggregates) {
        std::snprintf(line, sizeof line, "%5g %6d %10.2f %10s %7s\n", a.sigma, a.images,
                      a.mean_final, opt(a.published_mean, "%.2f").c_str(),
                      opt(a.delta_to_published, "%+.2f").c_str());
        out += line;
    }
    if (!report.complete) {
        out += "\nINCOMPLETE: missing";
        for (const std::string& m : report.missing_images) out += " " + m;
        out += "\n";
    }
    for (const std::string& w : report.warnings) out += "warning: " + w + "\n";
    return out;
}

json params_to_json(const DenoiseParams& p) {
    const BlockNlmParams s1 = p.stage1(0);
    return {{"levels", p.levels},
            {"wavelet", std::string(to_string(p.wavelet))},
            {"patch1", p.patch1},
            {"window1", p.window1},
            {"h1_factor", p.h1_factor},
            {"alpha1", s1.alpha},
            {"block_step", s1.block_step},
            {"band_h_scale", p.band_h_scale},
            {"patch2", p.patch2},
            {"window2", p.window2},
            {"h2_factor", p.h2_factor},
            {"boost", p.boost},
            {"boost_sigma_max", p.boost_sigma_max},
            {"distance_convention", std::string(to_string(p.distance))},
            {"use_eta", p.use_eta},
            {"unit_normals", p.unit_normals},
            {"stage2_reference",
             p.stage2_reference == ReferenceSource::PreDenoised ? "pre_denoised" : "noisy"}};
}

DenoiseParams params_from_json(const json& j, DenoiseParams p) {
    if (!j.is_object()) throw InvalidArgument("config: parameters must be a JSON object");
    static const std::set<std::string> known = {
        "levels",  "wavelet",  "patch1",    "window1",         "h1_factor",
        "alpha1",  "block_step", "band_h_scale", "patch2",     "window2",
        "h2_factor", "boost",  "boost_sigma_max", "distance_convention", "use_eta",
        "unit_normals", "stage2_reference"};
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw InvalidArgument("config: unknown key '" + key + "'");
    }
    if (j.contains("levels")) p.levels = typed<int>(j, "levels");
    if (j.contains("wavelet")) p.wavelet = parse_wavelet(typed<std::string>(j, "wavelet"));
    if (j.contains("patch1")) p.patch1 = typed<int>(j, "patch1");
    if (j.contains("window1")) p.window1 = typed<int>(j, "window1");
    if (j.contains("h1_factor")) p.h1_factor = typed<double>(j, "h1_factor");
    if (j.contains("alpha1")) p.alpha1 = typed<double>(j, "alpha1");
    if (j.contains("block_step")) p.block_step = typed<int>(j, "block_step");
    if (j.contains("band_h_scale")) {
        const json& v = j.at("band_h_scale");
        if (!v.is_array()) throw InvalidArgument("config: 'band_h_scale' must be an array");
        p.band_h_scale.clear();
        for (const json& s : v) {
            if (!s.is_number()) throw InvalidArgument("config: 'band_h_scale' entries must be numbers");
            p.band_h_scale.push_back(s.get<double>());
        }
    }
    if (j.contains("patch2")) p.patch2 = typed<int>(j, "patch2");
    if (j.contains("window2")) p.window2 = typed<int>(j, "window2");
    if (j.contains("h2_factor")) p.h2_factor = typed<double>(j, "h2_factor");
    if (j.contains("boost")) p.boost = typed<double>(j, "boost");
    if (j.contains("boost_sigma_max")) p.boost_sigma_max = typed<double>(j, "boost_sigma_max");
    if (j.contains("distance_convention")) {
        p.distance = parse_distance_convention(typed<std::string>(j, "distance_convention"));
    }
    if (j.contains("use_eta")) p.use_eta = typed<bool>(j, "use_eta");
    if (j.contains("unit_normals")) p.unit_normals = typed<bool>(j, "unit_normals");
    if (j.contains("stage2_reference")) {
        const std::string s = typed<std::string>(j, "stage2_reference");
        if (s == "pre_denoised") {
            p.stage2_reference = ReferenceSource::PreDenoised;
        } else if (s == "noisy") {
            p.stage2_reference = ReferenceSource::Noisy;
        } else {
            throw InvalidArgument("config: stage2_reference must be pre_denoised or noisy");
        }
    }
    return p;
}

}  // namespace mhnlm
