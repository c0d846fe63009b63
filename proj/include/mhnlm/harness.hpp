/**
 * @file harness.hpp
 * @brief Command-line front end: add-noise, denoise, bench, psnr.
 *
 * Exit codes: 0 success, 2 usage, 3 file I/O, 4 parameter invariant or
 * numeric failure.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mhnlm/pipeline.hpp"
#include "mhnlm/report.hpp"

namespace mhnlm {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitIo = 3, kExitInvariant = 4 };

/// Bad command line or configuration file contents.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Published per-cell seed: 1000 * (position in kBenchImages + 1) + sigma for
/// the standard cells, a hash of the name otherwise.
std::uint64_t bench_seed(std::string_view image, double sigma);

/// SHA-256 and size of the corpus files these results were produced with.
struct CorpusEntry {
    std::string_view name;
    int width;
    int height;
    std::string_view sha256;  ///< empty when no canonical copy was available
};
std::span<const CorpusEntry> known_corpus();

struct BenchCell {
    std::string image;
    double sigma = 0;
    std::uint64_t seed = 0;
};

struct BenchOptions {
    std::filesystem::path corpus;
    std::vector<BenchCell> cells;
    DenoiseParams params;  ///< sigma is taken per cell
    bool clip_noisy = false;  ///< round the noisy image to 8 bits before denoising
    std::optional<std::filesystem::path> output_dir;  ///< noisy/pre/final PGMs per cell
    std::function<void(const std::string&)> progress;

    /// Every image x sigma pair with its published seed.
    static std::vector<BenchCell> grid(std::span<const std::string> images,
                                       std::span<const double> sigmas);
};

nlohmann::json bench_config_to_json(const BenchOptions& o);
/// Inverse of bench_config_to_json. Unknown keys throw UsageError.
BenchOptions bench_options_from_json(const nlohmann::json& j);

/// Noise, both stages and PSNR for one image. `outputs` receives the images.
BenchRun run_cell(const ImageGrid& clean, const BenchCell& cell, const DenoiseParams& params,
                  bool clip_noisy, StageOutputs* outputs = nullptr, ImageGrid* noisy = nullptr);

/// Missing corpus files are listed and the report marked incomplete.
BenchReport run_bench(const BenchOptions& o);

/// Parses argv and runs the command. Never calls exit().
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mhnlm
