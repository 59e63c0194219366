// mgtc: motion-guided video token compression toolkit.
//
// Exit codes: 0 ok, 2 usage, 3 format/shape, 4 feasibility, 5 I/O.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgtc/baselines.hpp"
#include "mgtc/demo_task.hpp"
#include "mgtc/errors.hpp"
#include "mgtc/flops.hpp"
#include "mgtc/mgtc.hpp"
#include "mgtc/provenance.hpp"
#include "mgtc/raw_io.hpp"
#include "mgtc/snapshot.hpp"
#include "mgtc/stats.hpp"
#include "mgtc/synthetic.hpp"
#include "mgtc/tokenizer.hpp"
#include "mgtc/y4m.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitFeasibility = 4;
constexpr int kExitIo = 5;

mgtc::CubeShape parse_cube(const std::string& text) {
    mgtc::CubeShape shape;
    char x1 = 0, x2 = 0;
    std::istringstream ss(text);
    if (!(ss >> shape.c >> x1 >> shape.p1 >> x2 >> shape.p2) || x1 != 'x' || x2 != 'x')
        throw mgtc::ConfigError("cube shape must look like 2x16x16, got '" + text + "'");
    return shape;
}

std::pair<int, int> parse_views(const std::string& text) {
    int a = 0, b = 0;
    char x = 0;
    std::istringstream ss(text);
    if (!(ss >> a >> x >> b) || x != 'x' || a < 1 || b < 1)
        throw mgtc::ConfigError("views must look like 5x3, got '" + text + "'");
    return {a, b};
}

std::vector<double> parse_ratios(const std::string& text) {
    std::vector<double> out;
    std::istringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    if (out.empty()) throw mgtc::ConfigError("no ratios given");
    return out;
}

mgtc::VideoClip load_input(const std::string& path, std::string sidecar) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".y4m")
        return mgtc::load_y4m(path);
    if (sidecar.empty()) sidecar = path + ".json";
    return mgtc::load_raw(path, sidecar);
}

struct ClipOptions {
    std::string input;
    std::string sidecar;
    std::string cube = "2x16x16";
    double fps = 0.0;  // 0 = no resample
    int frames = 0;
    int offset = 0;

    void attach(CLI::App* cmd, bool required = true) {
        auto* opt = cmd->add_option("--input", input, "input video (.y4m or raw)");
        if (required) opt->required();
        cmd->add_option("--sidecar", sidecar, "sidecar for raw input (default <input>.json)");
        cmd->add_option("--cube", cube, "cube shape c x p1 x p2 (default 2x16x16)");
        cmd->add_option("--fps", fps, "resample to this FPS");
        cmd->add_option("--frames", frames, "number of frames to sample");
        cmd->add_option("--offset", offset, "start frame offset for resampling");
    }

    mgtc::VideoClip load() const {
        mgtc::VideoClip clip = load_input(input, sidecar);
        if (fps > 0.0 || frames > 0) {
            if (fps <= 0.0 || frames <= 0)
                throw mgtc::ConfigError("--fps and --frames must be given together");
            clip = mgtc::resample_fps(clip, {fps, frames, offset});
        }
        return clip;
    }

    json config_json() const {
        return {{"input", input}, {"cube", cube}, {"fps", fps},
                {"frames", frames}, {"offset", offset}};
    }
};

mgtc::EncoderSpec preset_spec(const std::string& preset, int depth, int width,
                              double mlp_ratio, int classes) {
    if (preset == "vit-b") return mgtc::EncoderSpec::vit_b(classes);
    if (preset == "vit-l") return mgtc::EncoderSpec::vit_l(classes);
    if (preset == "custom") {
        if (depth < 1 || width < 1)
            throw mgtc::ConfigError("custom preset requires --depth and --width");
        return {depth, width, mlp_ratio, classes, 1};
    }
    throw mgtc::ConfigError("unknown preset '" + preset + "' (vit-b | vit-l | custom)");
}

int cmd_mask(const ClipOptions& clip_opt, const std::string& strategy, double ratio,
             const std::string& mode, std::optional<uint64_t> seed, std::string output,
             std::string provenance_path) {
    mgtc::VideoClip clip = clip_opt.load();
    mgtc::CubeGrid grid = mgtc::tokenize(clip, parse_cube(clip_opt.cube));

    mgtc::TokenMask mask;
    auto strat = mgtc::strategy_from_string(strategy);
    switch (strat) {
        case mgtc::MaskStrategy::mgtc: {
            auto m = mode == "train" ? mgtc::MaskMode::train : mgtc::MaskMode::eval;
            mask = mgtc::mgtc_mask(grid, ratio, m, seed);
            break;
        }
        case mgtc::MaskStrategy::random:
            if (!seed) throw mgtc::ConfigError("random strategy requires --seed");
            mask = mgtc::random_mask(grid, ratio, *seed);
            break;
        case mgtc::MaskStrategy::tube:
            if (!seed) throw mgtc::ConfigError("tube strategy requires --seed");
            mask = mgtc::tube_mask(grid, ratio, *seed);
            break;
        case mgtc::MaskStrategy::cell_running:
            mask = mgtc::cell_running_mask(grid, ratio);
            break;
    }

    json config = clip_opt.config_json();
    config["strategy"] = strategy;
    config["ratio"] = ratio;
    config["mode"] = mode;
    if (seed) config["seed"] = *seed;

    mgtc::atomic_write_text(output, mgtc::mask_to_json(mask).dump(2) + "\n");
    if (provenance_path.empty()) provenance_path = output + ".prov.json";
    mgtc::atomic_write_text(provenance_path,
                            mgtc::provenance_block(config, clip_opt.input).dump(2) + "\n");

    std::cout << "wrote " << output << ": L=" << mask.total()
              << " masked=" << mask.masked_count() << " lambda=" << mask.threshold_lambda
              << "\n";
    return kExitOk;
}

int cmd_flops(const std::string& preset, int depth, int width, double mlp_ratio, int classes,
              long tokens, double ratio, const std::string& views,
              const std::string& json_out) {
    mgtc::EncoderSpec spec = preset_spec(preset, depth, width, mlp_ratio, classes);
    auto profile = mgtc::estimate_flops(spec, tokens);
    auto [clips, crops] = views.empty() ? std::pair<int, int>{1, 1} : parse_views(views);

    std::cout << "encoder: depth=" << spec.depth << " width=" << spec.width
              << " mlp_ratio=" << spec.mlp_ratio << " classes=" << spec.num_classes << "\n"
              << "tokens: " << tokens << "\n"
              << "per block  qkv+proj: " << profile.qkv_and_proj / 1e9 << " G\n"
              << "           attention: " << profile.attention_scores_and_values / 1e9 << " G\n"
              << "           mlp: " << profile.mlp / 1e9 << " G\n"
              << "total: " << profile.total_gflops << " GFLOPs";
    if (clips * crops > 1)
        std::cout << "  (x" << clips << "x" << crops << " views = "
                  << profile.total_gflops * clips * crops << " G)";
    std::cout << "\n";

    json out{{"tokens", profile.tokens},
             {"per_block",
              {{"qkv_and_proj", profile.qkv_and_proj},
               {"attention_scores_and_values", profile.attention_scores_and_values},
               {"mlp", profile.mlp}}},
             {"head", profile.head},
             {"total_gflops", profile.total_gflops},
             {"views", {{"clips", clips}, {"crops", crops}}},
             {"total_gflops_all_views", profile.total_gflops * clips * crops}};

    if (ratio > 0.0) {
        auto saving = mgtc::savings_report(spec, tokens, ratio);
        std::cout << "masked tokens: " << saving.masked_tokens << " -> "
                  << saving.flops_masked << " GFLOPs, saving "
                  << saving.relative_saving * 100.0 << "%\n";
        out["savings"] = {{"mask_ratio", saving.mask_ratio},
                          {"masked_tokens", saving.masked_tokens},
                          {"flops_full", saving.flops_full},
                          {"flops_masked", saving.flops_masked},
                          {"relative_saving", saving.relative_saving}};
    }
    if (!json_out.empty()) mgtc::atomic_write_text(json_out, out.dump(2) + "\n");
    return kExitOk;
}

int cmd_stats(const std::vector<std::string>& inputs, const std::string& cube, double epsilon,
              const std::string& format, const std::string& output) {
    std::vector<mgtc::VideoClip> clips;
    for (const auto& path : inputs) clips.push_back(load_input(path, ""));
    std::vector<const mgtc::VideoClip*> ptrs;
    for (const auto& c : clips) ptrs.push_back(&c);

    auto hist = mgtc::residual_histogram(ptrs, parse_cube(cube), epsilon);
    auto fmt = format == "csv" ? mgtc::ReportFormat::csv : mgtc::ReportFormat::json;
    mgtc::emit_report(hist, output, fmt);

    json input_records = json::array();
    for (const auto& path : inputs)
        input_records.push_back({{"path", path}, {"hash_fnv1a64", mgtc::fnv1a64_file(path)}});
    json prov{{"library_version", mgtc::kLibraryVersion},
              {"config", {{"cube", cube}, {"epsilon", epsilon}, {"format", format}}},
              {"inputs", input_records}};
    mgtc::atomic_write_text(output + ".prov.json", prov.dump(2) + "\n");

    std::cout << "cubes: " << hist.total
              << "  near_zero_fraction: " << hist.near_zero_fraction << "\n";
    return kExitOk;
}

int cmd_compare(const ClipOptions& clip_opt, const std::string& ratios_text, uint64_t seed,
                const std::string& format, const std::string& output) {
    mgtc::VideoClip clip = clip_opt.load();
    mgtc::CubeGrid grid = mgtc::tokenize(clip, parse_cube(clip_opt.cube));
    auto summary = mgtc::compare_strategies(grid, parse_ratios(ratios_text), seed);
    auto fmt = format == "csv" ? mgtc::ReportFormat::csv : mgtc::ReportFormat::json;
    mgtc::emit_report(summary, output, fmt);

    json config = clip_opt.config_json();
    config["ratios"] = ratios_text;
    config["seed"] = seed;
    mgtc::atomic_write_text(output + ".prov.json",
                            mgtc::provenance_block(config, clip_opt.input).dump(2) + "\n");

    for (const auto& r : summary.records)
        std::cout << r.strategy << " @ " << r.ratio
                  << ": energy_kept=" << r.kept_motion_energy_fraction
                  << " proxy_err=" << r.reconstruction_proxy_error << "\n";
    return kExitOk;
}

int cmd_demo_model(double mask_ratio, uint64_t seed, int steps, double lr) {
    mgtc::DemoConfig cfg;
    cfg.mask_ratio = mask_ratio;
    cfg.seed = seed;
    if (steps > 0) cfg.max_steps = steps;
    if (lr > 0.0) cfg.lr = lr;

    auto result = mgtc::run_direction_demo(cfg);
    for (std::size_t e = 0; e < result.accuracy_per_epoch.size(); ++e)
        std::cout << "epoch " << e << ": accuracy " << result.accuracy_per_epoch[e]
                  << " mean_loss " << result.mean_loss_per_epoch[e] << "\n";
    std::cout << "final accuracy " << result.final_accuracy << " after "
              << result.steps_used << " steps\n";
    return result.final_accuracy >= 0.95 ? kExitOk : 1;
}

int cmd_gen_corpus(const std::string& out_dir, int noise_count, int static_count) {
    fs::create_directories(out_dir);
    auto emit = [&](const mgtc::VideoClip& clip, const std::string& name) {
        auto base = (fs::path(out_dir) / name).string();
        mgtc::write_raw(clip, base + ".raw", base + ".raw.json");
    };
    emit(mgtc::moving_block_clip(16, 64, 64, 16, 16, 0, 4), "moving_right");
    emit(mgtc::moving_block_clip(16, 64, 64, 16, 32, 48, -4), "moving_left");
    for (int n = 0; n < noise_count; ++n)
        emit(mgtc::noise_clip(16, 64, 64, 1000 + n), "noise_" + std::to_string(n));
    for (int n = 0; n < static_count; ++n)
        emit(mgtc::static_clip(16, 64, 64, static_cast<uint8_t>(40 + 30 * n)),
             "static_" + std::to_string(n));
    std::cout << "corpus written to " << out_dir << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& provenance_path) {
    std::ifstream in(provenance_path);
    if (!in) throw mgtc::IoError("cannot open provenance: " + provenance_path);
    json prov;
    try {
        in >> prov;
    } catch (const json::exception& e) {
        throw mgtc::FormatError("provenance is not valid JSON: " + std::string(e.what()));
    }

    auto check_one = [](const std::string& path, const std::string& recorded) {
        std::string actual = mgtc::fnv1a64_file(path);
        if (actual != recorded) {
            std::cerr << "hash mismatch for " << path << ": recorded " << recorded
                      << ", actual " << actual << "\n";
            return false;
        }
        std::cout << path << ": ok\n";
        return true;
    };

    bool ok = true;
    if (prov.contains("input"))
        ok = check_one(prov["input"].get<std::string>(),
                       prov.at("input_hash_fnv1a64").get<std::string>());
    else if (prov.contains("inputs"))
        for (const auto& rec : prov["inputs"])
            ok = check_one(rec.at("path").get<std::string>(),
                           rec.at("hash_fnv1a64").get<std::string>()) &&
                 ok;
    else
        throw mgtc::FormatError("provenance record has no input hashes");
    return ok ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"motion-guided video token compression toolkit"};
    app.require_subcommand(1);

    // mask
    auto* mask_cmd = app.add_subcommand("mask", "compute and write a token mask");
    ClipOptions mask_clip;
    mask_clip.attach(mask_cmd);
    std::string strategy = "mgtc", mode = "eval", mask_out = "mask.json", mask_prov;
    double mask_ratio = 0.25;
    std::optional<uint64_t> mask_seed;
    mask_cmd->add_option("--strategy", strategy, "mgtc | random | tube | cell_running");
    mask_cmd->add_option("--ratio", mask_ratio, "masked fraction in [0, 1)");
    mask_cmd->add_option("--mode", mode, "train | eval (mgtc only)")
        ->check(CLI::IsMember({"train", "eval"}));
    mask_cmd->add_option("--seed", mask_seed, "PRNG seed");
    mask_cmd->add_option("--output", mask_out, "mask output path");
    mask_cmd->add_option("--provenance", mask_prov, "provenance output path");

    // flops
    auto* flops_cmd = app.add_subcommand("flops", "analytical transformer FLOPs profile");
    std::string preset = "vit-b", views, flops_json;
    int depth = 0, width = 0, classes = 400;
    double mlp_ratio = 4.0, flops_ratio = 0.0;
    long tokens = 1568;
    flops_cmd->add_option("--preset", preset, "vit-b | vit-l | custom");
    flops_cmd->add_option("--depth", depth, "blocks (custom preset)");
    flops_cmd->add_option("--width", width, "hidden dim (custom preset)");
    flops_cmd->add_option("--mlp-ratio", mlp_ratio, "MLP expansion factor");
    flops_cmd->add_option("--classes", classes, "classification head size");
    flops_cmd->add_option("--tokens", tokens, "input token count");
    flops_cmd->add_option("--ratio", flops_ratio, "also report savings at this mask ratio");
    flops_cmd->add_option("--views", views, "clips x crops multiplier, e.g. 5x3");
    flops_cmd->add_option("--json", flops_json, "write profile JSON here");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "pooled residual histogram over clips");
    std::vector<std::string> stats_inputs;
    std::string stats_cube = "2x16x16", stats_format = "csv", stats_out = "histogram.csv";
    double epsilon = 1.0;
    stats_cmd->add_option("--input", stats_inputs, "input clips")->required();
    stats_cmd->add_option("--cube", stats_cube, "cube shape");
    stats_cmd->add_option("--epsilon", epsilon, "near-zero residual threshold");
    stats_cmd->add_option("--format", stats_format, "json | csv")
        ->check(CLI::IsMember({"json", "csv"}));
    stats_cmd->add_option("--output", stats_out, "report path");

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "masking strategy comparison");
    ClipOptions compare_clip;
    compare_clip.attach(compare_cmd);
    std::string ratios = "0.1,0.25,0.5", compare_format = "csv", compare_out = "compare.csv";
    uint64_t compare_seed = 1;
    compare_cmd->add_option("--ratios", ratios, "comma-separated mask ratios");
    compare_cmd->add_option("--seed", compare_seed, "run-level seed");
    compare_cmd->add_option("--format", compare_format, "json | csv")
        ->check(CLI::IsMember({"json", "csv"}));
    compare_cmd->add_option("--output", compare_out, "report path");

    // demo-model
    auto* demo_cmd = app.add_subcommand("demo-model",
                                        "train the toy encoder on masked synthetic clips");
    double demo_ratio = 0.5, demo_lr = 0.0;
    uint64_t demo_seed = 7;
    int demo_steps = 0;
    demo_cmd->add_option("--mask-ratio", demo_ratio, "MGTC mask ratio");
    demo_cmd->add_option("--seed", demo_seed, "run seed");
    demo_cmd->add_option("--steps", demo_steps, "step budget override");
    demo_cmd->add_option("--lr", demo_lr, "learning rate override");

    // gen-corpus
    auto* corpus_cmd = app.add_subcommand("gen-corpus", "write the synthetic clip corpus");
    std::string corpus_dir = "corpus";
    int noise_count = 3, static_count = 3;
    corpus_cmd->add_option("--output-dir", corpus_dir, "directory for raw clips");
    corpus_cmd->add_option("--noise", noise_count, "number of noise clips");
    corpus_cmd->add_option("--static", static_count, "number of static clips");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "recheck input hashes in a provenance file");
    std::string verify_path;
    verify_cmd->add_option("--provenance", verify_path, "provenance JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (mask_cmd->parsed())
            return cmd_mask(mask_clip, strategy, mask_ratio, mode, mask_seed, mask_out,
                            mask_prov);
        if (flops_cmd->parsed())
            return cmd_flops(preset, depth, width, mlp_ratio, classes, tokens, flops_ratio,
                             views, flops_json);
        if (stats_cmd->parsed())
            return cmd_stats(stats_inputs, stats_cube, epsilon, stats_format, stats_out);
        if (compare_cmd->parsed())
            return cmd_compare(compare_clip, ratios, compare_seed, compare_format, compare_out);
        if (demo_cmd->parsed())
            return cmd_demo_model(demo_ratio, demo_seed, demo_steps, demo_lr);
        if (corpus_cmd->parsed()) return cmd_gen_corpus(corpus_dir, noise_count, static_count);
        if (verify_cmd->parsed()) return cmd_verify(verify_path);
    } catch (const mgtc::FeasibilityError& e) {
        std::cerr << "feasibility error: " << e.what() << "\n";
        return kExitFeasibility;
    } catch (const mgtc::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const mgtc::ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const mgtc::BoundsError& e) {
        std::cerr << "range error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const mgtc::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const mgtc::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
