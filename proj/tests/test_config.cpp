// Run configuration: strict parsing (unknown keys rejected at every level),
// validation errors carry the config exit class, snapshot round trips, and
// the stage dependency graph self-check.

#include <filesystem>
#include <fstream>

#include <doctest/doctest.h>
#include <nlohmann/json.hpp>

#include "poseac/core/check.hpp"
#include "poseac/pipeline/run_config.hpp"
#include "poseac/pipeline/stages.hpp"

#include "test_util.hpp"

using namespace poseac;
using namespace poseac::pipeline;
using nlohmann::json;

TEST_CASE("config: empty object yields the validated defaults") {
    const RunConfig c = RunConfig::from_json(json::object());
    c.validate();
    CHECK(c.name == "default");
    CHECK(c.seed == 1);
    CHECK(c.corpus.n_identities == 20);
    CHECK(c.corpus.frame_h == 128);
    CHECK(c.crop.out_h == c.corpus.frame_h);
    CHECK(c.arms.size() == 3);
}

TEST_CASE("config: unknown keys rejected at every nesting level") {
    CHECK_THROWS_AS((void)RunConfig::from_json({{"naem", "typo"}}), ConfigError);
    CHECK_THROWS_AS((void)RunConfig::from_json({{"corpus", {{"identities", 10}}}}),
                    ConfigError);
    CHECK_THROWS_AS((void)RunConfig::from_json({{"posenet", {{"width", 8}}}}),
                    ConfigError);
    CHECK_THROWS_AS((void)RunConfig::from_json({{"teacher_train", {{"epoch", 3}}}}),
                    ConfigError);
    CHECK_THROWS_AS((void)RunConfig::from_json({{"degradation", {{"crf", 45}}}}),
                    ConfigError);
    CHECK_THROWS_AS((void)RunConfig::from_json({{"gait_train", {{"learning_rate", 0.1}}}}),
                    ConfigError);
}

TEST_CASE("config: type errors are config errors, not crashes") {
    CHECK_THROWS_AS((void)RunConfig::from_json({{"seed", "not-a-number"}}), ConfigError);
    CHECK_THROWS_AS((void)RunConfig::from_json({{"corpus", {{"n_frames", "many"}}}}),
                    ConfigError);
    CHECK_THROWS_AS((void)RunConfig::from_json({{"arms", {"pretrained", "mystery"}}}),
                    ConfigError);
}

TEST_CASE("config: validation rejects out-of-contract values") {
    auto with = [](json patch) {
        RunConfig c = RunConfig::from_json(patch);
        c.validate();
    };
    CHECK_THROWS_AS(with({{"corpus", {{"n_identities", 9}}}}), ConfigError);
    CHECK_THROWS_AS(with({{"corpus", {{"scenarios", {"bag", "coat"}}}}}), ConfigError);
    CHECK_THROWS_AS(with({{"corpus", {{"scenarios", {"normal", "normal"}}}}}), ConfigError);
    CHECK_THROWS_AS(with({{"corpus", {{"angles", {45}}}}}), ConfigError);
    CHECK_THROWS_AS(with({{"corpus", {{"angles", {45, 45}}}}}), ConfigError);
    CHECK_THROWS_AS(with({{"corpus", {{"angles", {0, 190}}}}}), ConfigError);
    CHECK_THROWS_AS(with({{"corpus", {{"frame_h", 60}}}}), ConfigError);
    CHECK_THROWS_AS(with({{"corpus", {{"frame_h", 68}}}}), ConfigError);  // not %8
    CHECK_THROWS_AS(with({{"corpus", {{"n_frames", 2}}}}), ConfigError);
    CHECK_THROWS_AS(with({{"name", "has/slash"}}), ConfigError);
    CHECK_THROWS_AS(with({{"arms", json::array()}}), ConfigError);
    CHECK_THROWS_AS(with({{"arms", {"pretrained", "pretrained"}}}), ConfigError);
    CHECK_THROWS_AS(with({{"posenet", {{"student_widths", {0, 4, 4, 4}}}}}), ConfigError);
    CHECK_THROWS_AS(with({{"posenet", {{"student_widths", {4, 4, 4}}}}}), ConfigError);
    CHECK_THROWS_AS(with({{"teacher_train", {{"lr", 0.0}}}}), ConfigError);
    CHECK_THROWS_AS(with({{"teacher_train", {{"momentum", 1.0}}}}), ConfigError);
    CHECK_THROWS_AS(with({{"corrector", {{"quality_factor", 1.5}}}}), ConfigError);
    CHECK_THROWS_AS(with({{"degradation", {{"quality", 0}}}}), ConfigError);
}

TEST_CASE("config: snapshot round trip preserves every field") {
    json patch = {
        {"name", "rt"},
        {"seed", 999},
        {"arms", {"pretrained", "corrected"}},
        {"corpus",
         {{"n_identities", 12},
          {"scenarios", {"normal", "bag"}},
          {"angles", {0, 90}},
          {"n_frames", 6},
          {"frame_h", 64},
          {"frame_w", 48}}},
        {"degradation", {{"quality", 20}}},
        {"crop", {{"pad_frac_v", 0.5}, {"pad_frac_h", 0.3}, {"aspect_tolerance", -1.0}}},
        {"posenet", {{"student_widths", {6, 6, 10, 10}}, {"teacher_width_mult", 3}}},
        {"teacher_train", {{"epochs", 2}, {"lr", 0.02}, {"clip_norm", 7.5}}},
        {"corrector", {{"scales", {4, 8, 12}}, {"quality_factor", 0.25}, {"skips", false}}},
        {"corrector_train", {{"epochs", 3}}},
        {"gait", {{"hidden", 32}, {"feat", 16}}},
        {"gait_train", {{"epochs", 5}}},
    };
    RunConfig c = RunConfig::from_json(patch);
    c.validate();
    const RunConfig back = RunConfig::from_json(c.to_json());
    back.validate();
    CHECK(back.to_json() == c.to_json());
    CHECK(back.name == "rt");
    CHECK(back.seed == 999);
    CHECK(back.arms.size() == 2);
    CHECK(back.corpus.n_identities == 12);
    CHECK(back.crop.aspect_tolerance == -1.0);
    CHECK(back.student_widths == std::array<int, 4>{6, 6, 10, 10});
    CHECK(back.teacher_width_mult == 3);
    CHECK(back.teacher_train.epochs == 2);
    CHECK(back.teacher_train.clip_norm == 7.5);
    CHECK(back.corrector.scales == std::array<int, 3>{4, 8, 12});
    CHECK(back.corrector.skips == false);
    CHECK(back.corrector_train.quality_factor == 0.25);
    CHECK(back.gait_net.hidden == 32);
    CHECK(back.gait_train.epochs == 5);
}

TEST_CASE("config: teacher/student architectures derive from the same widths") {
    RunConfig c = RunConfig::from_json(
        {{"posenet", {{"student_widths", {5, 6, 7, 8}}, {"teacher_width_mult", 2}}}});
    const PoseNetConfig s = c.student_config();
    const PoseNetConfig t = c.teacher_config();
    CHECK(s.widths == std::array<int, 4>{5, 6, 7, 8});
    CHECK(t.widths == std::array<int, 4>{10, 12, 14, 16});
    CHECK(s.in_h == c.corpus.frame_h);
    CHECK(t.in_h == s.in_h);
    CHECK(t.n_joints == 17);
}

TEST_CASE("config: load() reports missing and malformed files as config errors") {
    CHECK_THROWS_AS((void)RunConfig::load("/nonexistent/path/config.json"), ConfigError);
    const auto path = std::filesystem::temp_directory_path() / "poseac_bad_cfg.json";
    std::ofstream(path) << "{ not json";
    CHECK_THROWS_AS((void)RunConfig::load(path), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("stage graph: dependency dry-run check passes and is complete") {
    check_stage_graph();  // throws on any uncovered input
    const auto& graph = stage_graph();
    REQUIRE(graph.size() == 8);
    CHECK(graph.front().name == "build-corpus");
    CHECK(graph.back().name == "report");
    // Every stage except the first consumes at least one artifact, and every
    // stage produces at least one.
    for (size_t i = 0; i < graph.size(); ++i) {
        CHECK(!graph[i].outputs.empty());
        if (i > 0) CHECK(!graph[i].inputs.empty());
    }
}
