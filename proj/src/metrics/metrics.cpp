#include "poseac/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "poseac/core/check.hpp"

namespace poseac {

namespace {

// Compensated summation so reduction order cannot leak into reported means.
struct KahanSum {
    double sum = 0.0, comp = 0.0;
    void add(double v) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

}  // namespace

std::string to_string(Arm a) {
    switch (a) {
        case Arm::pretrained: return "pretrained";
        case Arm::finetuned: return "finetuned";
        case Arm::corrected: return "corrected";
    }
    throw Error("bad arm enum");
}

std::string to_string(EvalSet s) {
    return s == EvalSet::clean ? "clean" : "degraded";
}

Arm arm_from_string(const std::string& s) {
    if (s == "pretrained") return Arm::pretrained;
    if (s == "finetuned") return Arm::finetuned;
    if (s == "corrected") return Arm::corrected;
    throw ConfigError("unknown arm: " + s);
}

double keypoint_bbox_area(const Pose& gt) {
    POSEAC_CHECK(!gt.empty(), "bbox of empty pose");
    double x0 = gt[0].x, x1 = gt[0].x, y0 = gt[0].y, y1 = gt[0].y;
    for (const auto& p : gt) {
        x0 = std::min(x0, double(p.x));
        x1 = std::max(x1, double(p.x));
        y0 = std::min(y0, double(p.y));
        y1 = std::max(y1, double(p.y));
    }
    return (x1 - x0) * (y1 - y0);
}

double oks(const Pose& pred, const Pose& gt, double scale,
           const std::vector<double>& sigmas) {
    POSEAC_CHECK(scale > 0.0, "oks scale must be positive, got ", scale);
    POSEAC_CHECK(pred.size() == gt.size() && gt.size() == sigmas.size(),
                 "oks size mismatch");
    KahanSum acc;
    for (size_t k = 0; k < gt.size(); ++k) {
        POSEAC_CHECK(sigmas[k] > 0.0, "oks sigma must be positive");
        const double dx = pred[k].x - gt[k].x;
        const double dy = pred[k].y - gt[k].y;
        const double var = 2.0 * sigmas[k];
        acc.add(std::exp(-(dx * dx + dy * dy) / (2.0 * scale * var * var)));
    }
    return acc.sum / double(gt.size());
}

std::vector<double> default_oks_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
    return t;
}

void average_precision(const std::vector<Pose>& preds, const std::vector<Pose>& gts,
                       const std::vector<double>& sigmas,
                       const std::vector<double>& thresholds, EvalReport& out) {
    POSEAC_CHECK(!preds.empty() && preds.size() == gts.size(),
                 "average_precision needs aligned non-empty pose lists");
    std::vector<double> scores(preds.size());
    for (size_t i = 0; i < preds.size(); ++i)
        scores[i] = oks(preds[i], gts[i], keypoint_bbox_area(gts[i]), sigmas);

    out.ap_by_threshold.clear();
    KahanSum mean;
    for (double t : thresholds) {
        long hits = 0;
        for (double s : scores)
            if (s >= t) ++hits;
        const double prec = double(hits) / double(scores.size());
        out.ap_by_threshold.emplace_back(t, prec);
        mean.add(prec);
    }
    out.mean_ap = mean.sum / double(thresholds.size());
    out.n_poses = static_cast<long>(preds.size());
}

double pose_l2(const Pose& pred, const Pose& gt) {
    POSEAC_CHECK(pred.size() == gt.size(), "pose_l2 size mismatch");
    KahanSum acc;
    for (size_t k = 0; k < gt.size(); ++k) {
        const double dx = pred[k].x - gt[k].x;
        const double dy = pred[k].y - gt[k].y;
        acc.add(std::sqrt(dx * dx + dy * dy));
    }
    return acc.sum;
}

void l2_report(const std::vector<Pose>& preds, const std::vector<Pose>& gts,
               int n_bins, double hi, EvalReport& out) {
    POSEAC_CHECK(!preds.empty() && preds.size() == gts.size(),
                 "l2_report needs aligned non-empty pose lists");
    POSEAC_CHECK(n_bins > 0, "l2_report needs at least one bin");
    std::vector<double> dist(preds.size());
    KahanSum mean;
    for (size_t i = 0; i < preds.size(); ++i) {
        dist[i] = pose_l2(preds[i], gts[i]);
        mean.add(dist[i]);
    }
    out.l2_mean = mean.sum / double(dist.size());

    if (hi < 0.0) {  // P99 by nearest rank
        std::vector<double> sorted = dist;
        std::sort(sorted.begin(), sorted.end());
        const size_t idx =
            std::min(sorted.size() - 1,
                     static_cast<size_t>(std::ceil(0.99 * double(sorted.size()))) - 1);
        hi = sorted[idx];
    }

    out.l2_histogram.bin_edges.resize(n_bins + 1);
    out.l2_histogram.counts.assign(n_bins, 0);
    const double width = hi > 0.0 ? hi / n_bins : 1.0;
    for (int b = 0; b <= n_bins; ++b) out.l2_histogram.bin_edges[b] = b * width;
    for (double d : dist) {
        int b = hi > 0.0 ? static_cast<int>(d / width) : 0;
        b = std::clamp(b, 0, n_bins - 1);  // overflow mass stays in the last bin
        ++out.l2_histogram.counts[b];
    }
    out.n_poses = static_cast<long>(preds.size());
}

EvalReport evaluate_poses(const std::vector<Pose>& preds, const std::vector<Pose>& gts,
                          Arm arm, EvalSet dataset) {
    EvalReport r;
    r.arm = arm;
    r.dataset = dataset;
    const auto& s = coco17_sigmas();
    const std::vector<double> sigmas(s.begin(), s.end());
    average_precision(preds, gts, sigmas, default_oks_thresholds(), r);
    l2_report(preds, gts, 40, -1.0, r);
    return r;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["arm"] = to_string(arm);
    j["dataset"] = to_string(dataset);
    j["mean_ap"] = mean_ap;
    j["l2_mean"] = l2_mean;
    j["n_poses"] = n_poses;
    auto& ap = j["ap_by_threshold"] = nlohmann::json::array();
    for (const auto& [t, p] : ap_by_threshold) ap.push_back({{"oks", t}, {"precision", p}});
    j["l2_histogram"] = {{"bin_edges", l2_histogram.bin_edges},
                         {"counts", l2_histogram.counts}};
    return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
    EvalReport r;
    r.arm = arm_from_string(j.at("arm").get<std::string>());
    r.dataset = j.at("dataset").get<std::string>() == "clean" ? EvalSet::clean
                                                              : EvalSet::degraded;
    r.mean_ap = j.at("mean_ap").get<double>();
    r.l2_mean = j.at("l2_mean").get<double>();
    r.n_poses = j.at("n_poses").get<long>();
    for (const auto& e : j.at("ap_by_threshold"))
        r.ap_by_threshold.emplace_back(e.at("oks").get<double>(),
                                       e.at("precision").get<double>());
    r.l2_histogram.bin_edges =
        j.at("l2_histogram").at("bin_edges").get<std::vector<double>>();
    r.l2_histogram.counts = j.at("l2_histogram").at("counts").get<std::vector<long>>();
    return r;
}

std::string EvalReport::histogram_csv() const {
    std::string csv = "bin_lo,bin_hi,count\n";
    for (size_t b = 0; b < l2_histogram.counts.size(); ++b) {
        csv += std::to_string(l2_histogram.bin_edges[b]) + "," +
               std::to_string(l2_histogram.bin_edges[b + 1]) + "," +
               std::to_string(l2_histogram.counts[b]) + "\n";
    }
    return csv;
}

}  // namespace poseac
