#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseac/codec/codec.hpp"
#include "poseac/corrector/corrector.hpp"
#include "poseac/corrector/train.hpp"
#include "poseac/databuild/databuild.hpp"
#include "poseac/gait/gait.hpp"
#include "poseac/metrics/metrics.hpp"
#include "poseac/posenet/train.hpp"
#include "poseac/synthwalk/synthwalk.hpp"

namespace poseac::pipeline {

// Resolved experiment configuration. Parsed strictly (unknown keys rejected,
// ranges checked) against the shape published in docs/config-schema.json;
// per-stage RNG seeds are derived from the master seed, never stored.
struct RunConfig {
    std::string name = "default";
    uint64_t seed = 1;
    std::filesystem::path out_dir;  // defaults to runs/<name>
    std::vector<Arm> arms = {Arm::pretrained, Arm::finetuned, Arm::corrected};
    bool plots = false;

    synthwalk::CorpusConfig corpus;
    codec::DegradationConfig degradation;
    databuild::CropConfig crop;

    std::array<int, 4> student_widths = {12, 12, 24, 24};
    int teacher_width_mult = 2;
    double softmax_temp = 1.0;

    PoseTrainConfig teacher_train;
    PoseTrainConfig student_train;
    PoseTrainConfig finetune_train;
    CorrectorConfig corrector;
    CorrectorTrainConfig corrector_train;
    gait::GaitConfig gait_net;
    gait::GaitTrainConfig gait_train;

    PoseNetConfig student_config() const;
    PoseNetConfig teacher_config() const;

    bool has_arm(Arm a) const;

    void validate() const;
    nlohmann::json to_json() const;  // resolved snapshot
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
};

// Stage-aligned run directory layout.
struct RunPaths {
    std::filesystem::path root, corpus, dataset, ckpts, eval, gait, report;

    explicit RunPaths(const std::filesystem::path& run_root)
        : root(run_root),
          corpus(run_root / "corpus"),
          dataset(run_root / "dataset"),
          ckpts(run_root / "ckpts"),
          eval(run_root / "eval"),
          gait(run_root / "gait"),
          report(run_root / "report") {}

    std::filesystem::path teacher_ckpt() const { return ckpts / "teacher.ckpt"; }
    std::filesystem::path student_pretrained_ckpt() const {
        return ckpts / "student_pretrained.ckpt";
    }
    std::filesystem::path student_finetuned_ckpt() const {
        return ckpts / "student_finetuned.ckpt";
    }
    std::filesystem::path corrector_ckpt() const { return ckpts / "corrector.ckpt"; }
    std::filesystem::path gait_ckpt() const { return gait / "gait.ckpt"; }
    std::filesystem::path manifest() const { return dataset / "manifest.json"; }
    std::filesystem::path state() const { return root / "state.json"; }
    std::filesystem::path lock() const { return root / ".lock"; }
    std::filesystem::path config_snapshot() const { return root / "config.json"; }
    std::filesystem::path eval_report(Arm arm, EvalSet set) const {
        return eval / (to_string(arm) + "_" + to_string(set) + ".json");
    }
    std::filesystem::path eval_hist_csv(Arm arm, EvalSet set) const {
        return eval / (to_string(arm) + "_" + to_string(set) + "_hist.csv");
    }
    std::filesystem::path poses_dir(const std::string& source) const {
        return eval / "poses" / source;
    }
    std::filesystem::path gait_report() const { return gait / "report.json"; }
};

}  // namespace poseac::pipeline
