// clutterfit: scene generation, segmentation + shape fitting, evaluation and
// benchmarking from the command line.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include "clutterfit/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace clutterfit;

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return 1;
        default: return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Template fitting for cluttered tabletop scenes"};
    app.set_config("--config", "", "TOML config file; flags override its values");
    app.require_subcommand(1);
    app.fallthrough();

    PipelineConfig config;
    std::string preset = "easy";
    std::string mode = "full";
    std::vector<std::string> bench_presets;
    int objects = 0;
    std::string out;

    app.add_option("--preset", preset, "easy|normal|hard|random")->capture_default_str();
    app.add_option("--seed", config.seed, "master seed")->capture_default_str();
    app.add_option("--objects", objects, "object count (overrides the preset)");
    app.add_option("--categories", config.categories, "restrict to these categories");
    app.add_option("--h-threshold", config.h_threshold, "mergence Chamfer threshold (m^2)")->capture_default_str();
    app.add_option("--noise-erode", config.noise.erode_radius, "mask erosion radius (px)")->capture_default_str();
    app.add_option("--noise-flip", config.noise.flip_probability, "category flip probability")->capture_default_str();
    app.add_option("--noise-drop", config.noise.drop_probability, "mask drop probability")->capture_default_str();
    app.add_option("--fit-evals", config.fit.max_evaluations, "objective evaluations per search")->capture_default_str();
    app.add_option("--fit-samples", config.fit.samples, "points sampled per prediction")->capture_default_str();
    app.add_option("--reverse-weight", config.fit.reverse_weight, "weight of the predicted->observed term")
        ->capture_default_str();
    app.add_option("--mode", mode, "fit mode: none|scale-only|surface-only|full")->capture_default_str();
    app.add_option("--out", out, "output directory")->envname("CLUTTERFIT_OUT");

    auto* gen = app.add_subcommand("gen", "generate a scene directory");
    auto* estimate = app.add_subcommand("estimate", "segment and fit a scene");
    std::string scene_dir;
    std::string results_dir;
    estimate->add_option("scene", scene_dir, "scene directory")->required();
    auto* eval = app.add_subcommand("eval", "evaluate estimation results");
    eval->add_option("scene", scene_dir, "scene directory")->required();
    eval->add_option("results", results_dir, "results directory")->required();
    auto* bench = app.add_subcommand("bench", "repeated seeded scenes, all fit modes");
    bench->add_option("--reps", config.repetitions, "scenes per preset")->capture_default_str();
    bench->add_option("--presets", bench_presets, "presets to run (default easy normal hard)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        config.preset = preset_from_string(preset);
        config.mode = fit_mode_from_string(mode);
        if (objects > 0) config.objects = objects;
        if (!bench_presets.empty()) {
            config.bench_presets.clear();
            for (const auto& p : bench_presets) config.bench_presets.push_back(preset_from_string(p));
        }
        if (!out.empty()) {
            config.out = out;
        } else if (*eval) {
            config.out = results_dir;
        }

        if (*gen) {
            cmd_gen(config);
        } else if (*estimate) {
            cmd_estimate(scene_dir, config);
        } else if (*eval) {
            cmd_eval(scene_dir, results_dir, config);
        } else if (*bench) {
            cmd_bench(config);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
