#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseac/core/image.hpp"
#include "poseac/core/pose_types.hpp"
#include "poseac/pipeline/run_config.hpp"

namespace poseac::pipeline {

// Assembles report/{report.json, report.txt, summary.md, pose_table.csv,
// gait_table.csv, l2_means.csv} from the persisted eval/gait artifacts.
// `stage_runtime` is the runner's per-stage wall-clock record; it lands in
// report.json only, never in the CSVs. With plots=true also renders L2
// histogram bars per arm and a qualitative overlay grid (ground truth plus
// one row per arm over seeded sample frames) as PNGs.
void write_report(const RunConfig& cfg, const RunPaths& paths,
                  const nlohmann::json& stage_runtime, bool plots);

// Skeleton drawn over a copy of the frame; exposed for tests.
Image overlay_pose(const Image& frame, const Pose& pose, const float color[3]);

// Minimal white-on-dark bar chart over uniform bins; exposed for tests.
Image render_histogram(const std::vector<long>& counts, int px_h, int px_w);

}  // namespace poseac::pipeline
