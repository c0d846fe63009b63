#include <omp.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "mhnlm/harness.hpp"

namespace mhnlm {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

/// Stage parameters shared by denoise and bench. Only flags the user actually
/// passed override the defaults or a loaded config.
struct ParamFlags {
    int levels = 2;
    std::string wavelet = "db2";
    int patch1 = 9, window1 = 15;
    double h1_factor = 6.0;
    int patch2 = 7, window2 = 15;
    double h2_factor = 3.87;
    double boost = 4.0 / 3.0;
    double boost_sigma_max = 20.0;
    std::string distance = "raw";
    bool no_eta = false;
    bool unit_normals = false;
    bool noisy_reference = false;
    std::vector<CLI::Option*> opts;

    void add(CLI::App* app) {
        opts = {
            app->add_option("--levels", levels, "Wavelet decomposition levels J")->capture_default_str(),
            app->add_option("--wavelet", wavelet, "Wavelet family")
                ->check(CLI::IsMember({"haar", "db2", "db4"}, CLI::ignore_case))
                ->capture_default_str(),
            app->add_option("--patch1", patch1, "Stage-1 patch side")->capture_default_str(),
            app->add_option("--window1", window1, "Stage-1 search window side")->capture_default_str(),
            app->add_option("--h1-factor", h1_factor, "Stage-1 h as a multiple of sigma")
                ->capture_default_str(),
            app->add_option("--patch2", patch2, "Stage-2 patch side")->capture_default_str(),
            app->add_option("--window2", window2, "Stage-2 search window side")->capture_default_str(),
            app->add_option("--h2-factor", h2_factor, "Stage-2 h as a multiple of sigma")
                ->capture_default_str(),
            app->add_option("--boost", boost, "Stage-2 self-weight multiplier")->capture_default_str(),
            app->add_option("--boost-sigma-max", boost_sigma_max,
                            "Largest sigma that still gets the self-weight boost")
                ->capture_default_str(),
            app->add_option("--distance-convention", distance,
                            "Patch distance: per-pixel mean (normalized) or patch sum (raw)")
                ->check(CLI::IsMember({"normalized", "raw"}))
                ->capture_default_str(),
            app->add_flag("--no-eta", no_eta, "Force the orientation factor to 1"),
            app->add_flag("--unit-normals", unit_normals, "Normalize gradients before Gamma"),
            app->add_flag("--noisy-reference", noisy_reference,
                          "Stage 2 compares noisy patches instead of pre-denoised ones"),
        };
    }

    bool given(std::size_t k) const { return opts[k]->count() > 0; }

    DenoiseParams apply(DenoiseParams p) const {
        if (given(0)) p.levels = levels;
        if (given(1)) p.wavelet = parse_wavelet(wavelet);
        if (given(2)) p.patch1 = patch1;
        if (given(3)) p.window1 = window1;
        if (given(4)) p.h1_factor = h1_factor;
        if (given(5)) p.patch2 = patch2;
        if (given(6)) p.window2 = window2;
        if (given(7)) p.h2_factor = h2_factor;
        if (given(8)) p.boost = boost;
        if (given(9)) p.boost_sigma_max = boost_sigma_max;
        if (given(10)) p.distance = parse_distance_convention(distance);
        if (given(11)) p.use_eta = false;
        if (given(12)) p.unit_normals = true;
        if (given(13)) p.stage2_reference = ReferenceSource::Noisy;
        return p;
    }
};

json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ImageIoError(ImageIoError::Kind::Unreadable, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
}

void save_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw ImageIoError(ImageIoError::Kind::WriteFailed, "cannot write " + path.string());
}

void require_readable(const fs::path& p, const char* what) {
    if (!fs::is_regular_file(p)) {
        throw ImageIoError(ImageIoError::Kind::Unreadable,
                           std::string(what) + " not found: " + p.string());
    }
}

void require_writable_dir(const fs::path& file, const char* what) {
    const fs::path dir = file.parent_path().empty() ? fs::path(".") : file.parent_path();
    if (!fs::is_directory(dir)) {
        throw ImageIoError(ImageIoError::Kind::WriteFailed,
                           std::string(what) + " directory does not exist: " + dir.string());
    }
}

/// Restores the OpenMP thread count when a command returns.
class ThreadScope {
public:
    explicit ThreadScope(int threads) : saved_(omp_get_max_threads()) {
        if (threads > 0) omp_set_num_threads(threads);
    }
    ~ThreadScope() { omp_set_num_threads(saved_); }
    ThreadScope(const ThreadScope&) = delete;
    ThreadScope& operator=(const ThreadScope&) = delete;

private:
    int saved_;
};

fs::path intermediate_path(const fs::path& output) {
    fs::path p = output;
    p.replace_filename(output.stem().string() + ".pre" + output.extension().string());
    return p;
}

struct AddNoiseArgs {
    std::string input, output, sidecar;
    double sigma = 0;
    std::uint64_t seed = 1;
};

int cmd_add_noise(const AddNoiseArgs& a, std::ostream& out) {
    if (!(a.sigma >= 0.0) || !std::isfinite(a.sigma)) {
        throw InvalidArgument("add-noise: sigma >= 0 violated");
    }
    require_readable(a.input, "input");
    require_writable_dir(a.output, "output");
    const fs::path sidecar = a.sidecar.empty() ? fs::path(a.output + ".json") : fs::path(a.sidecar);
    require_writable_dir(sidecar, "sidecar");

    const ImageGrid clean = read_image(a.input);
    const ImageGrid noisy = add_awgn(clean, {a.sigma, a.seed});
    write_image(noisy, a.output);
    const json meta = {{"schema_version", kReportSchemaVersion},
                       {"sigma", a.sigma},
                       {"seed", a.seed},
                       {"generator", "mt19937_64 + Box-Muller"},
                       {"source", a.input},
                       {"source_sha256", sha256_file(a.input)},
                       {"clipped_at_write", true}};
    save_text(sidecar, meta.dump(2) + "\n");
    out << "wrote " << a.output << " (PSNR vs source " << psnr(clean, quantized(noisy))
        << " dB)\n";
    return kExitOk;
}

struct DenoiseArgs {
    std::string input, output, clean, report, config, dump_bands;
    double sigma = 0;
    bool emit_intermediate = false;
    bool verbose = false;
    int threads = 0;
    CLI::Option* sigma_opt = nullptr;
    CLI::Option* input_opt = nullptr;
    ParamFlags params;
};

int cmd_denoise(const DenoiseArgs& a, std::ostream& out, std::ostream& err) {
    DenoiseParams p;
    std::optional<double> sigma;
    std::string input = a.input;
    std::string expected_hash;

    if (!a.config.empty()) {
        json cfg = load_json(a.config);
        if (cfg.contains("schema_version") && cfg.contains("config")) cfg = cfg.at("config");
        if (!cfg.is_object()) throw UsageError("denoise config must be a JSON object");
        for (const auto& [key, value] : cfg.items()) {
            if (key != "command" && key != "sigma" && key != "params" && key != "input" &&
                key != "input_sha256") {
                throw UsageError("denoise config: unknown key '" + key + "'");
            }
        }
        if (cfg.contains("command") && cfg.at("command") != "denoise") {
            throw UsageError("denoise config: command is not 'denoise'");
        }
        try {
            if (cfg.contains("sigma")) sigma = cfg.at("sigma").get<double>();
            if (cfg.contains("params")) p = params_from_json(cfg.at("params"));
            if (cfg.contains("input") && a.input_opt->count() == 0) {
                input = cfg.at("input").get<std::string>();
            }
            if (cfg.contains("input_sha256")) expected_hash = cfg.at("input_sha256").get<std::string>();
        } catch (const json::exception& e) {
            throw UsageError(std::string("denoise config: ") + e.what());
        } catch (const InvalidArgument& e) {
            throw UsageError(e.what());
        }
    }
    if (a.sigma_opt->count() > 0) sigma = a.sigma;
    if (!sigma) throw UsageError("denoise: --sigma is required");
    if (input.empty()) throw UsageError("denoise: --input is required");
    if (a.output.empty()) throw UsageError("denoise: --output is required");
    p = a.params.apply(p);
    p.sigma = *sigma;

    require_readable(input, "input");
    if (!a.clean.empty()) require_readable(a.clean, "clean reference");
    require_writable_dir(a.output, "output");
    if (!a.report.empty()) require_writable_dir(a.report, "report");
    if (!a.dump_bands.empty() && !fs::is_directory(a.dump_bands)) {
        throw ImageIoError(ImageIoError::Kind::WriteFailed,
                           "band dump directory does not exist: " + a.dump_bands);
    }
    p.validate();

    const std::string input_hash = sha256_file(input);
    if (!expected_hash.empty() && expected_hash != input_hash) {
        throw ImageIoError(ImageIoError::Kind::Unreadable,
                           "input " + input + " does not match the sha256 recorded in the config");
    }
    const ImageGrid noisy = read_image(input);
    std::optional<ImageGrid> clean;
    if (!a.clean.empty()) {
        clean = read_image(a.clean);
        if (!clean->same_shape(noisy)) {
            throw InvalidArgument("denoise: clean reference and input dimensions differ");
        }
    }
    const ThreadScope threads(a.threads);

    PipelineHook hook;
    if (a.verbose) {
        hook = [&err](const PipelineEvent& e) {
            char line[128];
            if (e.kind == PipelineEvent::Kind::BandFiltered) {
                static constexpr const char* kNames[] = {"x", "y", "xy"};
                std::snprintf(line, sizeof line, "  band level %d %s filtered (%.1f ms)", e.level,
                              kNames[static_cast<int>(e.orientation)], e.elapsed_ms);
            } else {
                std::snprintf(line, sizeof line, "%s done (%.1f ms)", e.stage.c_str(), e.elapsed_ms);
            }
            err << line << "\n";
        };
    }
    if (!a.dump_bands.empty()) {
        dump_pyramid(forward(noisy, p.levels, WaveletFilters::make(p.wavelet)), a.dump_bands);
    }

    const StageOutputs result = denoise_full(noisy, p, hook);
    if (!result.final.all_finite() || !result.pre_denoised.all_finite()) {
        throw InvalidArgument("denoise: output contains non-finite pixels");
    }
    write_image(result.final, a.output);
    std::optional<fs::path> pre_path;
    if (a.emit_intermediate) {
        pre_path = intermediate_path(a.output);
        write_image(result.pre_denoised, *pre_path);
    }

    json psnr_block = nullptr;
    if (clean) {
        const double final_db = psnr(*clean, result.final);
        const auto published = published_psnr(fs::path(a.clean).stem().string(), p.sigma);
        psnr_block = {{"noisy", psnr_to_json(psnr(*clean, noisy))},
                      {"pre_denoised", psnr_to_json(psnr(*clean, result.pre_denoised))},
                      {"final", psnr_to_json(final_db)},
                      {"published", published ? json(*published) : json(nullptr)},
                      {"delta_to_published",
                       published ? psnr_to_json(final_db - *published) : json(nullptr)}};
        out << "PSNR noisy " << psnr(*clean, noisy) << " dB, pre-denoised "
            << psnr(*clean, result.pre_denoised) << " dB, final " << final_db << " dB\n";
    }

    if (!a.report.empty()) {
        json bands = json::array();
        static constexpr const char* kNames[] = {"x", "y", "xy"};
        for (const BandStats& b : result.band_stats) {
            bands.push_back({{"level", b.level},
                             {"orientation", kNames[static_cast<int>(b.orientation)]},
                             {"before", {{"min", b.min_before}, {"max", b.max_before},
                                         {"variance", b.variance_before}}},
                             {"after", {{"min", b.min_after}, {"max", b.max_after},
                                        {"variance", b.variance_after}}}});
        }
        const json report = {
            {"schema_version", kReportSchemaVersion},
            {"config", {{"command", "denoise"},
                        {"sigma", p.sigma},
                        {"input", input},
                        {"input_sha256", input_hash},
                        {"params", params_to_json(p)}}},
            {"output", a.output},
            {"intermediate", pre_path ? json(pre_path->string()) : json(nullptr)},
            {"width", noisy.width()},
            {"height", noisy.height()},
            {"psnr", psnr_block},
            {"self_weight_multiplier", result.self_weight_multiplier},
            {"band_stats", bands},
            {"timings", timings_to_json(result.timings)},
            {"threads", omp_get_max_threads()}};
        save_text(a.report, report.dump(2) + "\n");
    }
    out << "wrote " << a.output << (pre_path ? " and " + pre_path->string() : std::string())
        << "\n";
    return kExitOk;
}

struct BenchArgs {
    std::string corpus = "corpus", report, table, config, output_dir;
    std::vector<std::string> images;
    std::vector<double> sigmas;
    bool clip_noisy = false;
    bool quiet = false;
    int threads = 0;
    CLI::Option* corpus_opt = nullptr;
    ParamFlags params;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
    BenchOptions o;
    std::map<std::string, std::string> expected_hashes;
    if (!a.config.empty()) {
        json cfg = load_json(a.config);
        if (cfg.contains("schema_version") && cfg.contains("config")) {
            if (cfg.contains("corpus_sha256")) {
                expected_hashes = cfg.at("corpus_sha256").get<std::map<std::string, std::string>>();
            }
            cfg = cfg.at("config");
        }
        o = bench_options_from_json(cfg);
        if (!a.images.empty() || !a.sigmas.empty()) {
            throw UsageError("bench: --images/--sigmas cannot be combined with --config");
        }
    } else {
        std::vector<std::string> images = a.images;
        if (images.empty()) images.assign(std::begin(kBenchImages), std::end(kBenchImages));
        std::vector<double> sigmas = a.sigmas;
        if (sigmas.empty()) sigmas.assign(std::begin(kBenchSigmas), std::end(kBenchSigmas));
        o.cells = BenchOptions::grid(images, sigmas);
    }
    if (a.corpus_opt->count() > 0 || o.corpus.empty()) o.corpus = a.corpus;
    if (a.clip_noisy) o.clip_noisy = true;
    o.params = a.params.apply(o.params);
    if (o.cells.empty()) throw UsageError("bench: no cells to run");

    if (!fs::is_directory(o.corpus)) {
        throw ImageIoError(ImageIoError::Kind::Unreadable,
                           "corpus directory not found: " + o.corpus.string());
    }
    if (!a.report.empty()) require_writable_dir(a.report, "report");
    if (!a.table.empty()) require_writable_dir(a.table, "table");
    if (!a.output_dir.empty()) {
        if (!fs::is_directory(a.output_dir)) {
            throw ImageIoError(ImageIoError::Kind::WriteFailed,
                               "output directory does not exist: " + a.output_dir);
        }
        o.output_dir = a.output_dir;
    }
    for (const BenchCell& c : o.cells) {
        DenoiseParams p = o.params;
        p.sigma = c.sigma;
        p.validate();
    }
    for (const auto& [name, hash] : expected_hashes) {
        const fs::path path = o.corpus / (name + ".pgm");
        if (fs::is_regular_file(path) && sha256_file(path) != hash) {
            throw ImageIoError(ImageIoError::Kind::Unreadable,
                               path.string() + " differs from the image the report was made with");
        }
    }
    if (!a.quiet) o.progress = [&err](const std::string& line) { err << line << "\n"; };

    const ThreadScope threads(a.threads);
    BenchReport report = run_bench(o);
    report.threads = omp_get_max_threads();

    const std::string table = render_table(report);
    out << table;
    if (!a.table.empty()) save_text(a.table, table);
    if (!a.report.empty()) save_text(a.report, to_json(report).dump(2) + "\n");
    if (!report.complete) {
        err << "bench: missing corpus images:";
        for (const std::string& m : report.missing_images) err << " " << m;
        err << " (report marked incomplete)\n";
        return kExitIo;
    }
    return kExitOk;
}

struct PsnrArgs {
    std::string reference, input;
};

int cmd_psnr(const PsnrArgs& a, std::ostream& out) {
    require_readable(a.reference, "reference");
    require_readable(a.input, "input");
    const double v = psnr(read_image(a.reference), read_image(a.input));
    char buf[32];
    if (std::isfinite(v)) {
        std::snprintf(buf, sizeof buf, "%.4f\n", v);
    } else {
        std::snprintf(buf, sizeof buf, "inf\n");
    }
    out << buf;
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-stage wavelet / non-local means image denoiser", "mhnlm"};
    app.require_subcommand(1);

    AddNoiseArgs noise;
    CLI::App* add_noise = app.add_subcommand("add-noise", "Add white Gaussian noise to an image");
    add_noise->add_option("--input", noise.input, "Clean PGM")->required();
    add_noise->add_option("--output", noise.output, "Noisy PGM to write")->required();
    add_noise->add_option("--sigma", noise.sigma, "Noise standard deviation")->required();
    add_noise->add_option("--seed", noise.seed, "Generator seed")->capture_default_str();
    add_noise->add_option("--sidecar", noise.sidecar, "JSON sidecar path (default OUTPUT.json)");

    DenoiseArgs den;
    CLI::App* denoise = app.add_subcommand("denoise", "Denoise one image");
    den.input_opt = denoise->add_option("--input", den.input, "Noisy PGM");
    denoise->add_option("--output", den.output, "Denoised PGM to write");
    den.sigma_opt = denoise->add_option("--sigma", den.sigma, "Noise standard deviation");
    denoise->add_option("--clean", den.clean, "Clean image; enables PSNR reporting");
    denoise->add_flag("--emit-intermediate", den.emit_intermediate,
                      "Also write the pre-denoised image as OUTPUT_STEM.pre.pgm");
    denoise->add_option("--report", den.report, "JSON report path");
    denoise->add_option("--config", den.config, "Replay the config of an earlier report");
    denoise->add_option("--dump-bands", den.dump_bands,
                        "Directory for a debug dump of the noisy image's wavelet bands");
    denoise->add_option("--threads", den.threads, "OpenMP threads (0 = runtime default)");
    denoise->add_flag("-v,--verbose", den.verbose, "Print per-stage progress");
    den.params.add(denoise);

    BenchArgs bench;
    CLI::App* bench_cmd = app.add_subcommand("bench", "Run the image x sigma benchmark grid");
    bench.corpus_opt =
        bench_cmd->add_option("--corpus", bench.corpus, "Directory with NAME.pgm files")
            ->capture_default_str();
    bench_cmd->add_option("--images", bench.images, "Image names (default: all five)")
        ->delimiter(',');
    bench_cmd->add_option("--sigmas", bench.sigmas, "Noise levels (default: 10,15,20,25,50)")
        ->delimiter(',');
    bench_cmd->add_option("--report", bench.report, "JSON report path");
    bench_cmd->add_option("--table", bench.table, "Text table path");
    bench_cmd->add_option("--config", bench.config, "Replay the config of an earlier report");
    bench_cmd->add_option("--output-dir", bench.output_dir, "Write noisy/pre/final images here");
    bench_cmd->add_flag("--clip-noisy", bench.clip_noisy,
                        "Round noisy images to 8 bits before denoising");
    bench_cmd->add_option("--threads", bench.threads, "OpenMP threads (0 = runtime default)");
    bench_cmd->add_flag("-q,--quiet", bench.quiet, "No per-cell progress");
    bench.params.add(bench_cmd);

    PsnrArgs ps;
    CLI::App* psnr_cmd = app.add_subcommand("psnr", "PSNR between two images");
    psnr_cmd->add_option("--reference", ps.reference, "Reference PGM")->required();
    psnr_cmd->add_option("--input", ps.input, "Test PGM")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*add_noise) return cmd_add_noise(noise, out);
        if (*denoise) return cmd_denoise(den, out, err);
        if (*bench_cmd) return cmd_bench(bench, out, err);
        if (*psnr_cmd) return cmd_psnr(ps, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ImageIoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const InvalidArgument& e) {
        err << "invalid parameters: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvariant;
    }
    return kExitUsage;
}

}  // namespace mhnlm
