#include "mhnlm/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

namespace mhnlm {
namespace {

using nlohmann::json;

constexpr std::array<CorpusEntry, 5> kCorpus{{
    {"lena", 512, 512, "3c011a8e33645ec9bf30d84b938a0ea56a53739e2fddf18e61df16842006bde1"},
    {"barbara", 512, 512, "e67e136136e7be8932bd1105f8011146356e5062c0e83826fdc5d1e42fdc70b8"},
    {"boats", 512, 512, "7fcef30d603b39070c2dd8f52e643f04e846835968645921cdd2f1578a185839"},
    {"peppers", 512, 512, ""},
    {"house", 256, 256, ""},
}};

const CorpusEntry* find_corpus_entry(std::string_view name) {
    for (const CorpusEntry& e : kCorpus) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

std::string cell_label(const BenchCell& c) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s sigma=%g seed=%llu", c.image.c_str(), c.sigma,
                  static_cast<unsigned long long>(c.seed));
    return buf;
}

}  // namespace

std::string sha256_hex(std::span<const unsigned char> bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError(ImageIoError::Kind::Unreadable, "cannot open " + path.string());
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

std::uint64_t bench_seed(std::string_view image, double sigma) {
    const auto s = static_cast<std::uint64_t>(std::llround(sigma * 1000.0));
    for (std::size_t i = 0; i < std::size(kBenchImages); ++i) {
        if (kBenchImages[i] == image && std::abs(sigma - std::round(sigma)) < 1e-9) {
            return 1000 * (i + 1) + static_cast<std::uint64_t>(std::llround(sigma));
        }
    }
    // FNV-1a of the name, mixed with sigma in thousandths.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : image) h = (h ^ c) * 1099511628211ull;
    return (h ^ s) * 1099511628211ull;
}

std::span<const CorpusEntry> known_corpus() { return kCorpus; }

std::vector<BenchCell> BenchOptions::grid(std::span<const std::string> images,
                                          std::span<const double> sigmas) {
    std::vector<BenchCell> cells;
    for (const std::string& img : images) {
        for (double s : sigmas) cells.push_back({img, s, bench_seed(img, s)});
    }
    return cells;
}

json bench_config_to_json(const BenchOptions& o) {
    json cells = json::array();
    for (const BenchCell& c : o.cells) {
        cells.push_back({{"image", c.image}, {"sigma", c.sigma}, {"seed", c.seed}});
    }
    return {{"command", "bench"},
            {"corpus", o.corpus.string()},
            {"clip_noisy", o.clip_noisy},
            {"params", params_to_json(o.params)},
            {"cells", std::move(cells)}};
}

BenchOptions bench_options_from_json(const json& j) {
    if (!j.is_object()) throw UsageError("bench config must be a JSON object");
    static const std::set<std::string> known = {"command", "corpus", "clip_noisy", "params",
                                                "cells"};
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw UsageError("bench config: unknown key '" + key + "'");
    }
    if (j.contains("command") && j.at("command") != "bench") {
        throw UsageError("bench config: command is not 'bench'");
    }
    BenchOptions o;
    try {
        if (j.contains("corpus")) o.corpus = j.at("corpus").get<std::string>();
        if (j.contains("clip_noisy")) o.clip_noisy = j.at("clip_noisy").get<bool>();
        if (j.contains("params")) o.params = params_from_json(j.at("params"));
        if (j.contains("cells")) {
            for (const json& c : j.at("cells")) {
                for (const auto& [key, value] : c.items()) {
                    if (key != "image" && key != "sigma" && key != "seed") {
                        throw UsageError("bench config: unknown cell key '" + key + "'");
                    }
                }
                o.cells.push_back({c.at("image").get<std::string>(), c.at("sigma").get<double>(),
                                   c.at("seed").get<std::uint64_t>()});
            }
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("bench config: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    return o;
}

BenchRun run_cell(const ImageGrid& clean, const BenchCell& cell, const DenoiseParams& params,
                  bool clip_noisy, StageOutputs* outputs, ImageGrid* noisy_out) {
    DenoiseParams p = params;
    p.sigma = cell.sigma;
    ImageGrid noisy = add_awgn(clean, {cell.sigma, cell.seed});
    if (clip_noisy) noisy = quantized(noisy);
    StageOutputs out = denoise_full(noisy, p);
    if (!out.final.all_finite() || !out.pre_denoised.all_finite()) {
        throw InvalidArgument("pipeline produced non-finite pixels for " + cell_label(cell));
    }

    BenchRun run;
    run.image = cell.image;
    run.width = clean.width();
    run.height = clean.height();
    run.sigma = cell.sigma;
    run.seed = cell.seed;
    run.psnr_noisy = psnr(clean, noisy);
    run.psnr_pre = psnr(clean, out.pre_denoised);
    run.psnr_final = psnr(clean, out.final);
    run.self_weight_multiplier = out.self_weight_multiplier;
    run.timings = out.timings;
    attach_published(run);
    if (noisy_out) *noisy_out = std::move(noisy);
    if (outputs) *outputs = std::move(out);
    return run;
}

BenchReport run_bench(const BenchOptions& o) {
    BenchReport report;
    report.config = bench_config_to_json(o);

    std::vector<std::string> names;
    for (const BenchCell& c : o.cells) {
        if (std::find(names.begin(), names.end(), c.image) == names.end()) names.push_back(c.image);
    }

    std::map<std::string, ImageGrid> images;
    for (const std::string& name : names) {
        const auto path = o.corpus / (name + ".pgm");
        if (!std::filesystem::is_regular_file(path)) {
            report.missing_images.push_back(name);
            continue;
        }
        ImageGrid img = read_image(path);
        const std::string hash = sha256_file(path);
        report.corpus_sha256[name] = hash;
        if (const CorpusEntry* e = find_corpus_entry(name)) {
            if (img.width() != e->width || img.height() != e->height) {
                report.warnings.push_back(name + ": " + std::to_string(img.width()) + "x" +
                                          std::to_string(img.height()) + ", expected " +
                                          std::to_string(e->width) + "x" +
                                          std::to_string(e->height));
            }
            if (!e->sha256.empty() && e->sha256 != hash) {
                report.warnings.push_back(name + ": sha256 differs from the reference copy");
            }
        }
        images.emplace(name, std::move(img));
    }
    report.complete = report.missing_images.empty();

    std::size_t done = 0;
    for (const BenchCell& cell : o.cells) {
        ++done;
        const auto it = images.find(cell.image);
        if (it == images.end()) continue;
        StageOutputs outputs;
        ImageGrid noisy;
        const bool keep = o.output_dir.has_value();
        BenchRun run = run_cell(it->second, cell, o.params, o.clip_noisy, keep ? &outputs : nullptr,
                                keep ? &noisy : nullptr);
        if (keep) {
            char stem[64];
            std::snprintf(stem, sizeof stem, "%s_s%g", cell.image.c_str(), cell.sigma);
            write_image(noisy, *o.output_dir / (std::string(stem) + "_noisy.pgm"));
            write_image(outputs.pre_denoised, *o.output_dir / (std::string(stem) + "_pre.pgm"));
            write_image(outputs.final, *o.output_dir / (std::string(stem) + "_final.pgm"));
        }
        if (o.progress) {
            char line[160];
            std::snprintf(line, sizeof line, "[%zu/%zu] %s: noisy %.2f pre %.2f final %.2f dB (%.1f s)",
                          done, o.cells.size(), cell_label(cell).c_str(), run.psnr_noisy,
                          run.psnr_pre, run.psnr_final, run.timings.total_ms / 1000.0);
            o.progress(line);
        }
        report.runs.push_back(std::move(run));
    }
    finalize(report);
    return report;
}

}  // namespace mhnlm
