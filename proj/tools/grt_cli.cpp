// Copyright 2026 The GRT Authors
// SPDX-License-Identifier: Apache-2.0

// grt: tokenize videos to GRTT, run retention/latency sweeps, generate
// synthetic corpora, reconstruct frames, and inspect token files.
//
// Exit codes: 0 success, 1 data error, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "grt/error.hpp"
#include "grt/ingest.hpp"
#include "grt/pipeline.hpp"
#include "grt/synthbench.hpp"
#include "grt/token_file.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("grt");
    logger->set_pattern("[grt %l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("GRT_LOG")) {
        spdlog::set_level(spdlog::level::from_str(env));
    }
}

// Flags shared by every command that runs the pipeline.
struct PipelineFlags {
    std::string config_path;
    double tau = 0;
    double delta = 0;
    std::string metric;
    std::string placeholder;
    std::string weights;
    bool no_merge = false;
    bool all_pass = false;
    std::uint64_t seed = 42;
    unsigned threads = 1;
    int max_gop = 0;
    double rho = 0;

    CLI::Option* tau_opt = nullptr;
    CLI::Option* delta_opt = nullptr;
    CLI::Option* metric_opt = nullptr;
    CLI::Option* placeholder_opt = nullptr;
    CLI::Option* weights_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
    CLI::Option* max_gop_opt = nullptr;
    CLI::Option* rho_opt = nullptr;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
        tau_opt = app->add_option("--tau", tau, "SSIM gating threshold");
        rho_opt = app->add_option("--rho", rho, "Scene-cut change fraction");
        max_gop_opt = app->add_option("--max-gop", max_gop, "Maximum frames per scene");
        delta_opt = app->add_option("--delta", delta, "Scene merge threshold");
        metric_opt = app->add_option("--metric", metric, "Scene distance")->check(CLI::IsMember({"cosine", "jsd"}));
        placeholder_opt = app->add_option("--placeholder", placeholder, "Placeholder attention mode")
                              ->check(CLI::IsMember({"masked", "dense"}));
        weights_opt = app->add_option("--weights", weights, "GRTW weight file (seeded weights otherwise)")
                          ->check(CLI::ExistingFile);
        app->add_flag("--no-merge", no_merge, "Skip scene merging");
        app->add_flag("--all-pass", all_pass, "Gate every patch in (full baseline)");
        app->add_flag("--dense", [this](std::int64_t) { placeholder = "dense"; }, "Same as --placeholder dense");
        seed_opt = app->add_option("--seed", seed, "Seed for weights and codebook");
        threads_opt = app->add_option("--threads", threads, "Worker thread cap")->check(CLI::PositiveNumber);
    }

    grt::PipelineConfig resolve() const {
        grt::PipelineConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            json j;
            try {
                in >> j;
            } catch (const json::exception& e) {
                throw grt::Error(grt::ErrorCode::InvalidConfig, config_path + ": " + e.what());
            }
            grt::merge_json(j, cfg);
        }
        json flags = json::object();
        if (tau_opt->count()) flags["tau"] = tau;
        if (rho_opt->count()) flags["rho"] = rho;
        if (max_gop_opt->count()) flags["max_gop"] = max_gop;
        if (metric_opt->count()) flags["metric"] = metric;
        if (delta_opt->count()) flags["delta"] = delta;
        if (!placeholder.empty()) flags["placeholder"] = placeholder;
        if (weights_opt->count()) flags["weights"] = weights;
        if (seed_opt->count()) flags["seed"] = seed;
        if (threads_opt->count()) flags["threads"] = threads;
        if (no_merge) flags["no_merge"] = true;
        if (all_pass) flags["all_pass"] = true;
        grt::merge_json(flags, cfg);
        try {
            cfg.validate();
        } catch (const grt::Error& e) {
            throw UsageError(e.what());
        }
        spdlog::info("effective config: {}", json(cfg).dump());
        return cfg;
    }
};

std::vector<grt::Rational> parse_fps_list(const std::string& text) {
    std::vector<grt::Rational> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        double v = 0;
        try {
            v = std::stod(item);
        } catch (const std::exception&) {
            throw UsageError("bad fps value '" + item + "'");
        }
        if (!(v > 0)) {
            throw UsageError("fps values must be positive");
        }
        out.push_back(grt::Rational::from_double(v));
    }
    if (out.empty()) {
        throw UsageError("--fps-list must name at least one rate");
    }
    return out;
}

// Either a manifest or a SynthSpec file provides the video.
grt::FrameSequence load_video(const std::string& manifest, const std::string& spec) {
    if (!manifest.empty() == !spec.empty()) {
        throw UsageError("give exactly one of --manifest or --spec");
    }
    if (!manifest.empty()) {
        return grt::load_frame_sequence(manifest);
    }
    return grt::generate_synthetic(grt::load_synth_spec(spec)).first;
}

json summary_json(const grt::StageCounts& c) {
    return {{"frames", c.frames},
            {"scenes", c.scenes},
            {"groups", c.groups},
            {"baseline_count", c.baseline},
            {"gated_count", c.after_pruning},
            {"merged_count", c.after_merging},
            {"pruning_ratio", c.pruning_ratio()},
            {"merging_ratio", c.merging_ratio()}};
}

int cmd_tokenize(const std::string& manifest, const std::string& spec, const std::string& fps,
                 const PipelineFlags& flags, const std::string& out) {
    const grt::PipelineConfig cfg = flags.resolve();
    grt::FrameSequence seq = load_video(manifest, spec);
    if (!fps.empty()) {
        seq = grt::resample_fps(seq, parse_fps_list(fps).front());
    }
    const auto w = grt::make_weights(cfg, seq);
    const auto result = grt::run_pipeline(seq, cfg, w);
    grt::write_grtt(result.flat, out);
    std::ofstream sidecar(out + ".json");
    sidecar << grt::grtt_index_json(result.flat).dump() << '\n';
    if (!sidecar) {
        throw grt::Error(grt::ErrorCode::IoError, "failed writing " + out + ".json");
    }
    std::cout << summary_json(result.counts).dump(2) << '\n';
    return 0;
}

int cmd_bench(const std::string& manifest, const std::string& spec, const std::string& fps_text,
              const PipelineFlags& flags, const std::string& out_dir, const std::string& format, int reps,
              bool skip_timing, bool skip_retention) {
    const auto fps_list = parse_fps_list(fps_text);
    const grt::PipelineConfig cfg = flags.resolve();
    const auto fmt = grt::parse_report_format(format);
    const auto seq = load_video(manifest, spec);
    fs::create_directories(out_dir);
    const std::string ext = fmt == grt::ReportFormat::Json ? "json" : fmt == grt::ReportFormat::Csv ? "csv" : "md";
    if (!skip_retention) {
        const auto report = grt::run_retention_sweep(seq, fps_list, cfg);
        const fs::path path = fs::path(out_dir) / ("retention." + ext);
        grt::emit_report(report, fmt, path);
        std::cout << grt::render(report, grt::ReportFormat::Markdown);
        spdlog::info("wrote {}", path.string());
    }
    if (!skip_timing) {
        const auto report = grt::run_timing_sweep(seq, fps_list, reps, cfg);
        const fs::path path = fs::path(out_dir) / ("timing." + ext);
        grt::emit_report(report, fmt, path);
        std::cout << grt::render(report, grt::ReportFormat::Markdown);
        spdlog::info("wrote {}", path.string());
    }
    return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir, const std::string& format) {
    const auto spec = grt::load_synth_spec(spec_path);
    const auto [seq, ann] = grt::generate_synthetic(spec);
    const auto manifest = grt::save_frame_sequence(
        seq, out_dir, format == "raw" ? grt::FrameFormat::RawRgb24 : grt::FrameFormat::PngSequence);
    std::ofstream(fs::path(out_dir) / "annotation.json") << grt::annotation_json(ann).dump() << '\n';
    std::cout << manifest.string() << '\n';
    return 0;
}

int cmd_reconstruct(const std::string& manifest, const PipelineFlags& flags, const std::string& out_dir) {
    const grt::PipelineConfig cfg = flags.resolve();
    const auto seq = grt::load_frame_sequence(manifest);
    grt::SceneConfig scene_cfg = cfg.scene;
    scene_cfg.all_pass = scene_cfg.all_pass || cfg.all_pass;
    const auto scenes = grt::segment_scenes(seq, scene_cfg);
    fs::create_directories(out_dir);
    for (const auto& s : scenes) {
        for (std::size_t i = 0; i <= s.residuals.size(); ++i) {
            std::ostringstream name;
            name << "recon_" << std::setw(6) << std::setfill('0') << (s.start_index + i) << ".png";
            grt::write_png(grt::reconstruct(s, i, cfg.scene.patch_size), fs::path(out_dir) / name.str());
        }
    }
    std::ofstream(fs::path(out_dir) / "scenes.json") << grt::scene_dump(scenes).dump(2) << '\n';
    std::cout << "reconstructed " << seq.size() << " frames in " << scenes.size() << " scenes\n";
    return 0;
}

int cmd_inspect(const std::string& path, bool as_json) {
    const auto flat = grt::read_grtt(path);
    std::map<std::uint32_t, std::size_t> per_group;
    std::array<std::size_t, 3> kinds{};
    for (const auto& e : flat.index) {
        ++per_group[e.group];
        ++kinds[static_cast<std::size_t>(e.kind)];
    }
    if (as_json) {
        json groups = json::array();
        for (std::uint32_t g = 0; g < flat.group_count; ++g) {
            groups.push_back(per_group.count(g) ? per_group[g] : 0);
        }
        std::cout << json{{"version", grt::kGrttVersion},
                          {"embed_dim", flat.embed_dim},
                          {"token_count", flat.size()},
                          {"group_count", flat.group_count},
                          {"group_token_counts", groups},
                          {"kinds", {{"key", kinds[0]}, {"p", kinds[1]}, {"rep", kinds[2]}}}}
                         .dump(2)
                  << '\n';
        return 0;
    }
    std::cout << "GRTT v" << grt::kGrttVersion << "  embed_dim=" << flat.embed_dim << "  tokens=" << flat.size()
              << "  groups=" << flat.group_count << '\n'
              << "kinds: key=" << kinds[0] << " p=" << kinds[1] << " rep=" << kinds[2] << '\n';
    for (std::uint32_t g = 0; g < flat.group_count; ++g) {
        std::cout << "  group " << g << ": " << (per_group.count(g) ? per_group[g] : 0) << " tokens\n";
    }
    return 0;
}

int cmd_export_weights(const std::string& manifest, const PipelineFlags& flags, const std::string& out) {
    const grt::PipelineConfig cfg = flags.resolve();
    const auto seq = grt::load_frame_sequence(manifest);
    grt::save_weights(grt::make_weights(cfg, seq), out);
    std::cout << out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Gated residual video tokenizer"};
    app.require_subcommand(1);

    std::string manifest, spec, out, fps_single, fps_list = "0.01,0.1,1", format = "json", synth_format = "png";
    int reps = 3;
    bool no_timing = false, no_retention = false, as_json = false;

    PipelineFlags tok_flags, bench_flags, recon_flags, weight_flags;

    auto* tok = app.add_subcommand("tokenize", "Tokenize a video into a GRTT file");
    tok->add_option("--manifest", manifest, "Frame manifest JSON");
    tok->add_option("--spec", spec, "Synthetic video spec JSON");
    tok->add_option("--fps", fps_single, "Resample to this rate first");
    tok->add_option("--out", out, "Output GRTT path")->required();
    tok_flags.attach(tok);

    auto* bench = app.add_subcommand("bench", "Retention and latency sweeps over frame rates");
    bench->add_option("--manifest", manifest, "Frame manifest JSON");
    bench->add_option("--spec", spec, "Synthetic video spec JSON");
    bench->add_option("--fps-list", fps_list, "Comma-separated rates")->capture_default_str();
    bench->add_option("--out", out, "Report directory")->required();
    bench->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv", "md"}))
        ->capture_default_str();
    bench->add_option("--reps", reps, "Timed repetitions (>= 3)")->check(CLI::Range(3, 1000))->capture_default_str();
    bench->add_flag("--no-timing", no_timing, "Skip the latency sweep");
    bench->add_flag("--no-retention", no_retention, "Skip the retention sweep");
    bench_flags.attach(bench);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic video with oracle annotations");
    synth->add_option("--spec", spec, "Synthetic video spec JSON")->required()->check(CLI::ExistingFile);
    synth->add_option("--out", out, "Output directory")->required();
    synth->add_option("--format", synth_format, "Frame storage")->check(CLI::IsMember({"png", "raw"}))
        ->capture_default_str();

    auto* recon = app.add_subcommand("reconstruct", "Rebuild frames from key frames and residuals");
    recon->add_option("--manifest", manifest, "Frame manifest JSON")->required();
    recon->add_option("--out", out, "Output directory")->required();
    recon_flags.attach(recon);

    auto* inspect = app.add_subcommand("inspect", "Dump a GRTT token file");
    inspect->add_option("grtt", out, "GRTT file")->required();
    inspect->add_flag("--json", as_json, "Machine-readable output");

    auto* weights = app.add_subcommand("export-weights", "Write seeded tokenizer weights as GRTW");
    weights->add_option("--manifest", manifest, "Frame manifest JSON (sets patch geometry)")->required();
    weights->add_option("--out", out, "Output GRTW path")->required();
    weight_flags.attach(weights);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    const char* stage = "setup";
    try {
        if (tok->parsed()) {
            stage = "tokenize";
            return cmd_tokenize(manifest, spec, fps_single, tok_flags, out);
        }
        if (bench->parsed()) {
            stage = "bench";
            return cmd_bench(manifest, spec, fps_list, bench_flags, out, format, reps, no_timing, no_retention);
        }
        if (synth->parsed()) {
            stage = "synth";
            return cmd_synth(spec, out, synth_format);
        }
        if (recon->parsed()) {
            stage = "reconstruct";
            return cmd_reconstruct(manifest, recon_flags, out);
        }
        if (inspect->parsed()) {
            stage = "inspect";
            return cmd_inspect(out, as_json);
        }
        if (weights->parsed()) {
            stage = "export-weights";
            return cmd_export_weights(manifest, weight_flags, out);
        }
    } catch (const UsageError& e) {
        spdlog::error("[{}] usage: {}", stage, e.what());
        return kExitUsage;
    } catch (const grt::Error& e) {
        spdlog::error("[{}] {}", stage, e.what());
        return e.code() == grt::ErrorCode::InvalidConfig ? kExitUsage : kExitData;
    } catch (const std::exception& e) {
        spdlog::error("[{}] {}", stage, e.what());
        return kExitData;
    }
    return kExitUsage;
}
