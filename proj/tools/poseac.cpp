#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "poseac/core/check.hpp"
#include "poseac/pipeline/stages.hpp"

namespace {

constexpr const char* kStages[] = {
    "build-corpus",  "train-teacher",    "build-dataset",
    "train-finetune", "train-correction", "evaluate",
    "gait-eval",     "report",
};

constexpr const char* kStageHelp[] = {
    "synthesize the walking corpus with exact keypoints",
    "train the teacher and the base (pretrained) student on clean frames",
    "pseudo-label, degrade, crop and persist the paired dataset",
    "fine-tune the student on degraded crops (arm B)",
    "train the corrector through the frozen student (arm C)",
    "pose metrics for every arm on degraded and clean test crops",
    "train the gait embedder and run the gallery/probe protocol",
    "assemble tables, CSVs and optional plots",
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"artifact-corrected pose estimation study"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path, out_dir;
    uint64_t seed = 0;
    bool resume = false, plots = false;

    app.add_option("--config", config_path, "JSON config file (defaults used if omitted)")
        ->check(CLI::ExistingFile);
    CLI::Option* seed_opt = app.add_option("--seed", seed, "master seed override");
    app.add_option("--out", out_dir, "run directory override");
    app.add_flag("--resume", resume, "skip stages whose outputs already exist (run-all)");
    app.add_flag("--plots", plots, "emit histogram and pose-overlay PNGs in the report");

    for (size_t i = 0; i < std::size(kStages); ++i)
        app.add_subcommand(kStages[i], kStageHelp[i]);
    app.add_subcommand("run-all", "run every stage in order");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    poseac::pipeline::RunConfig cfg;
    try {
        nlohmann::json j = nlohmann::json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in.good())
                throw poseac::ConfigError("cannot open config file: " + config_path);
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw poseac::ConfigError("config is not valid JSON (" + config_path +
                                          "): " + e.what());
            }
        }
        if (seed_opt->count() > 0) j["seed"] = seed;
        if (!out_dir.empty()) j["out_dir"] = out_dir;
        cfg = poseac::pipeline::RunConfig::from_json(j);
        cfg.plots = plots;
    } catch (const poseac::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }

    try {
        poseac::pipeline::Runner runner(cfg);
        if (app.got_subcommand("run-all")) {
            runner.run_all(resume);
        } else {
            for (const char* name : kStages)
                if (app.got_subcommand(name)) runner.run_stage(name);
        }
    } catch (const poseac::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
