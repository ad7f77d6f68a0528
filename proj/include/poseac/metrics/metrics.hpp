#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseac/core/pose_types.hpp"

namespace poseac {

enum class Arm { pretrained, finetuned, corrected };
enum class EvalSet { clean, degraded };

std::string to_string(Arm a);
std::string to_string(EvalSet s);
Arm arm_from_string(const std::string& s);

// Tight keypoint bounding-box area, the OKS scale term.
double keypoint_bbox_area(const Pose& gt);

// Mean over keypoints of exp(-d2 / (2 * scale * (2*sigma)^2)); every
// keypoint counts as visible.
double oks(const Pose& pred, const Pose& gt, double scale,
           const std::vector<double>& sigmas);

std::vector<double> default_oks_thresholds();  // 0.50:0.05:0.95

struct Histogram {
    std::vector<double> bin_edges;  // n_bins + 1 edges, uniform width
    std::vector<long> counts;       // values >= last edge land in the last bin
};

struct EvalReport {
    Arm arm = Arm::pretrained;
    EvalSet dataset = EvalSet::degraded;
    std::vector<std::pair<double, double>> ap_by_threshold;
    double mean_ap = 0.0;
    double l2_mean = 0.0;
    Histogram l2_histogram;
    long n_poses = 0;

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
    std::string histogram_csv() const;  // bin_lo,bin_hi,count lines
};

// Single-person AP: per threshold, fraction of poses whose OKS clears it.
// Fills ap fields of the report; scale comes from each gt pose's bbox area.
void average_precision(const std::vector<Pose>& preds, const std::vector<Pose>& gts,
                       const std::vector<double>& sigmas,
                       const std::vector<double>& thresholds, EvalReport& out);

// Per-pose distance: sum over keypoints of Euclidean distance. Histogram is
// n_bins uniform bins over [0, hi]; hi defaults to the P99 distance when < 0.
void l2_report(const std::vector<Pose>& preds, const std::vector<Pose>& gts,
               int n_bins, double hi, EvalReport& out);

// Convenience: AP + L2 with default thresholds/bins.
EvalReport evaluate_poses(const std::vector<Pose>& preds, const std::vector<Pose>& gts,
                          Arm arm, EvalSet dataset);

double pose_l2(const Pose& pred, const Pose& gt);

}  // namespace poseac
