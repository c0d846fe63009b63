/**
 * @file report.hpp
 * @brief Benchmark report: per-run PSNR rows, per-sigma aggregates, the
 *        published reference numbers and JSON / text rendering.
 */
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mhnlm/pipeline.hpp"

namespace mhnlm {

inline constexpr int kReportSchemaVersion = 1;

/// Images and noise levels of the published comparison, in table order.
inline constexpr std::string_view kBenchImages[] = {"lena", "barbara", "boats", "peppers",
                                                    "house"};
inline constexpr int kBenchSigmas[] = {10, 15, 20, 25, 50};

/// One row of the published per-image table.
struct PublishedRow {
    std::string_view image;
    int sigma;
    double bm3d, gsm, ksvd, bnlm, proposed;
};

std::span<const PublishedRow> published_table();

/// Published result of the two-stage method for (image, sigma), if listed.
/// Image names are matched case-insensitively.
std::optional<double> published_psnr(std::string_view image, double sigma);

/// Published per-sigma average of the two-stage method, if listed.
std::optional<double> published_average(double sigma);

struct BenchRun {
    std::string image;
    int width = 0;
    int height = 0;
    double sigma = 0;
    std::uint64_t seed = 0;
    double psnr_noisy = 0;
    double psnr_pre = 0;
    double psnr_final = 0;
    std::optional<double> published_psnr;
    std::optional<double> delta_to_published;  ///< psnr_final - published_psnr
    double self_weight_multiplier = 1.0;
    StageTimings timings;

    friend bool operator==(const BenchRun&, const BenchRun&) = default;
};

struct AggregateRow {
    double sigma = 0;
    int images = 0;
    double mean_final = 0;
    std::optional<double> published_mean;
    std::optional<double> delta_to_published;

    friend bool operator==(const AggregateRow&, const AggregateRow&) = default;
};

struct BenchReport {
    int schema_version = kReportSchemaVersion;
    nlohmann::json config;  ///< fully resolved configuration, enough to replay
    std::vector<BenchRun> runs;
    std::vector<AggregateRow> aggregates;
    std::vector<std::string> missing_images;
    std::vector<std::string> warnings;
    std::map<std::string, std::string> corpus_sha256;  ///< image name -> file hash
    bool complete = true;
    int threads = 1;

    friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

/// Fills published_psnr / delta_to_published from the published table.
void attach_published(BenchRun& run);

/// Mean final PSNR per sigma over the rows present, sorted by sigma.
std::vector<AggregateRow> aggregate(const std::vector<BenchRun>& runs);

/// Sorts rows by (image order in kBenchImages, then name; sigma) and
/// recomputes the aggregates.
void finalize(BenchReport& report);

/// With include_run_info == false, wall-clock timings and the thread count
/// are omitted so that the text depends only on inputs and parameters.
nlohmann::json to_json(const BenchReport& report, bool include_run_info = true);
BenchReport report_from_json(const nlohmann::json& j);

/// Aligned text table: one line per run, then the per-sigma averages.
std::string render_table(const BenchReport& report);

nlohmann::json timings_to_json(const StageTimings& t);
StageTimings timings_from_json(const nlohmann::json& j);

/// Every field of DenoiseParams except sigma, with auto values resolved.
nlohmann::json params_to_json(const DenoiseParams& p);

/// Overrides `base` with the keys present in `j`. Unknown keys and wrongly
/// typed values throw InvalidArgument.
DenoiseParams params_from_json(const nlohmann::json& j, DenoiseParams base = {});

/// PSNR values may be +infinity. Non-finite numbers are stored as the strings
/// "inf", "-inf" or "nan"; null is reserved for absent values.
nlohmann::json psnr_to_json(double v);
double psnr_from_json(const nlohmann::json& j);

}  // namespace mhnlm
