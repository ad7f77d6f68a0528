#include "poseac/pipeline/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "poseac/core/check.hpp"
#include "poseac/core/rng.hpp"
#include "poseac/databuild/databuild.hpp"
#include "poseac/gait/gait.hpp"
#include "poseac/metrics/metrics.hpp"

namespace poseac::pipeline {

namespace fs = std::filesystem;

namespace {

// COCO-17 limb pairs for the qualitative overlays.
constexpr int kSkeleton[][2] = {
    {0, 1},   {0, 2},   {1, 3},   {2, 4},   {0, 5},  {0, 6},
    {5, 7},   {7, 9},   {6, 8},   {8, 10},  {5, 11}, {6, 12},
    {11, 13}, {13, 15}, {12, 14}, {14, 16}, {5, 6},  {11, 12},
};

std::string fmt(double v, const char* f = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

std::string pad(std::string s, size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    POSEAC_CHECK(out.good(), "cannot write ", path.string());
    out << text;
    out.flush();
    POSEAC_CHECK(out.good(), "write failed: ", path.string());
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    POSEAC_CHECK(in.good(), "cannot read ", path.string());
    nlohmann::json j;
    in >> j;
    return j;
}

std::vector<Pose> read_pose_dump(const fs::path& path, size_t expected) {
    std::ifstream in(path);
    POSEAC_CHECK(in.good(), "missing pose dump: ", path.string());
    std::vector<Pose> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        Pose kp;
        for (const auto& p : j.at("kp"))
            kp.push_back({p.at(0).get<float>(), p.at(1).get<float>()});
        out.push_back(std::move(kp));
    }
    POSEAC_CHECK(out.size() == expected, "pose dump length mismatch: ", path.string());
    return out;
}

struct PoseCell {
    Arm arm = Arm::pretrained;
    EvalSet set = EvalSet::degraded;
    EvalReport rep;
    nlohmann::json provenance;
    std::string file;  // run-relative
};

const PoseCell& cell(const std::vector<PoseCell>& table, Arm arm, EvalSet set) {
    for (const auto& c : table)
        if (c.arm == arm && c.set == set) return c;
    throw Error("missing eval cell " + to_string(arm) + "/" + to_string(set));
}

void blit(Image& dst, const Image& src, int y0, int x0) {
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x)
            for (int c = 0; c < src.c; ++c) dst.at(y0 + y, x0 + x, c) = src.at(y, x, c);
}

void render_overlay_grid(const RunConfig& cfg, const RunPaths& paths) {
    const auto manifest = databuild::DatasetManifest::load(paths.manifest());
    const auto videos = databuild::load_videos(paths.dataset, manifest, Split::test,
                                               databuild::PairSide::degraded);

    std::vector<std::pair<int, int>> pool;  // (video, kept-frame position)
    for (int vi = 0; vi < int(videos.size()); ++vi)
        for (int k = 0; k < int(videos[vi].frames.size()); ++k) pool.emplace_back(vi, k);
    Rng rng(derive_seed(cfg.seed, "report-overlay"));
    rng.shuffle(pool);
    const int cols = int(std::min<size_t>(8, pool.size()));
    POSEAC_CHECK(cols > 0, "no test frames for the overlay grid");
    pool.resize(cols);

    std::map<std::string, std::vector<std::vector<Pose>>> arm_poses;
    for (const Arm a : cfg.arms) {
        auto& per_video = arm_poses[to_string(a)];
        for (const auto& v : videos)
            per_video.push_back(
                read_pose_dump(paths.poses_dir(to_string(a) + "_lq") / v.rec.video_id /
                                   "poses.jsonl",
                               v.labels.size()));
    }

    const int fh = cfg.corpus.frame_h, fw = cfg.corpus.frame_w;
    const int rows = 1 + int(cfg.arms.size());
    Image grid(rows * fh, cols * fw, 3);

    const float gt_color[3] = {0.15f, 0.9f, 0.25f};
    const std::map<std::string, std::array<float, 3>> arm_colors = {
        {"pretrained", {0.95f, 0.25f, 0.2f}},
        {"finetuned", {0.95f, 0.72f, 0.1f}},
        {"corrected", {0.2f, 0.8f, 0.95f}},
    };
    for (int col = 0; col < cols; ++col) {
        const auto [vi, k] = pool[col];
        const auto& v = videos[vi];
        blit(grid, overlay_pose(v.frames[k], v.gt[k], gt_color), 0, col * fw);
        for (int ai = 0; ai < int(cfg.arms.size()); ++ai) {
            const std::string name = to_string(cfg.arms[ai]);
            blit(grid,
                 overlay_pose(v.frames[k], arm_poses.at(name)[vi][k],
                              arm_colors.at(name).data()),
                 (1 + ai) * fh, col * fw);
        }
    }
    save_png(grid, paths.report / "plots" / "overlay_grid.png");
}

}  // namespace

Image overlay_pose(const Image& frame, const Pose& pose, const float color[3]) {
    POSEAC_CHECK(frame.c == 3, "overlay expects RGB frames");
    Image img = frame;
    for (const auto& e : kSkeleton) {
        if (e[0] >= int(pose.size()) || e[1] >= int(pose.size())) continue;
        draw_line_aa(img, pose[e[0]].x, pose[e[0]].y, pose[e[1]].x, pose[e[1]].y, 0.6f,
                     color);
    }
    for (const auto& p : pose) draw_disc_aa(img, p.x, p.y, 1.2f, color);
    clamp01(img);
    return img;
}

Image render_histogram(const std::vector<long>& counts, int px_h, int px_w) {
    POSEAC_CHECK(!counts.empty() && px_h >= 8 && px_w >= int(counts.size()),
                 "histogram render size too small");
    Image img(px_h, px_w, 3, 0.08f);
    long max_count = 1;
    for (long c : counts) max_count = std::max(max_count, c);
    const int base = px_h - 2;
    const double bar_w = double(px_w) / double(counts.size());
    for (size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        const int x0 = int(double(i) * bar_w);
        const int x1 = std::max(x0, int(double(i + 1) * bar_w) - 1);
        const int bh = int(std::lround(double(counts[i]) / double(max_count) * (px_h - 6)));
        for (int x = x0; x <= x1 && x < px_w; ++x)
            for (int y = base - bh; y <= base; ++y)
                for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = 0.92f;
    }
    for (int x = 0; x < px_w; ++x)
        for (int ch = 0; ch < 3; ++ch) img.at(px_h - 1, x, ch) = 0.5f;
    return img;
}

void write_report(const RunConfig& cfg, const RunPaths& paths,
                  const nlohmann::json& stage_runtime, bool plots) {
    fs::create_directories(paths.report);

    // Gather every input first so an incomplete run lists all gaps at once.
    std::vector<std::string> missing;
    std::vector<std::pair<Arm, EvalSet>> wanted;
    for (const Arm arm : cfg.arms)
        for (const EvalSet set : {EvalSet::degraded, EvalSet::clean}) {
            wanted.emplace_back(arm, set);
            if (!fs::exists(paths.eval_report(arm, set)))
                missing.push_back("eval/" + paths.eval_report(arm, set).filename().string());
        }
    if (!fs::exists(paths.gait_report())) missing.push_back("gait/report.json");
    if (!fs::exists(paths.manifest())) missing.push_back("dataset/manifest.json");
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw Error("incomplete run, missing artifacts: " + list);
    }

    std::vector<PoseCell> table;
    for (const auto& [arm, set] : wanted) {
        const fs::path p = paths.eval_report(arm, set);
        const nlohmann::json j = read_json(p);
        PoseCell c;
        c.arm = arm;
        c.set = set;
        c.rep = EvalReport::from_json(j);
        c.provenance = j.value("provenance", nlohmann::json::object());
        c.file = "eval/" + p.filename().string();
        table.push_back(std::move(c));
    }
    const nlohmann::json gait_j = read_json(paths.gait_report());

    std::vector<std::string> source_order = {"teacher_hq"};
    for (const Arm a : cfg.arms) {
        source_order.push_back(to_string(a) + "_lq");
        source_order.push_back(to_string(a) + "_hq");
    }

    // CSVs: fixed float formatting, no volatile fields.
    std::string pose_csv = "arm,dataset,mean_ap,n_poses\n";
    std::string l2_csv = "arm,dataset,l2_mean\n";
    for (const auto& c : table) {
        pose_csv += to_string(c.arm) + "," + to_string(c.set) + "," + fmt(c.rep.mean_ap) +
                    "," + std::to_string(c.rep.n_poses) + "\n";
        l2_csv += to_string(c.arm) + "," + to_string(c.set) + "," + fmt(c.rep.l2_mean) +
                  "\n";
    }
    write_text(paths.report / "pose_table.csv", pose_csv);
    write_text(paths.report / "l2_means.csv", l2_csv);

    const auto& sources = gait_j.at("sources");
    std::string gait_csv = "source,overall";
    for (const auto& sc : cfg.corpus.scenarios) gait_csv += "," + sc;
    gait_csv += "\n";
    for (const auto& name : source_order) {
        if (!sources.contains(name)) continue;
        const auto& rep = sources.at(name);
        gait_csv += name + "," + fmt(rep.at("overall_mean").get<double>());
        for (const auto& sc : cfg.corpus.scenarios) {
            gait_csv += ",";
            const auto& psm = rep.at("per_scenario_mean");
            if (psm.contains(sc)) gait_csv += fmt(psm.at(sc).get<double>());
        }
        gait_csv += "\n";
    }
    write_text(paths.report / "gait_table.csv", gait_csv);

    nlohmann::json pose_rows = nlohmann::json::array();
    for (const auto& c : table)
        pose_rows.push_back({{"arm", to_string(c.arm)},
                             {"dataset", to_string(c.set)},
                             {"mean_ap", c.rep.mean_ap},
                             {"l2_mean", c.rep.l2_mean},
                             {"n_poses", c.rep.n_poses},
                             {"source_file", c.file},
                             {"provenance", c.provenance}});
    const nlohmann::json report_j = {
        {"name", cfg.name},
        {"seed", cfg.seed},
        {"pose_table", pose_rows},
        {"gait",
         {{"source_file", "gait/report.json"},
          {"sources", sources},
          {"provenance", gait_j.value("provenance", nlohmann::json::object())}}},
        {"runtime", stage_runtime},
    };
    write_text(paths.report / "report.json", report_j.dump(2) + "\n");

    // Human-readable table.
    const auto two_col = [&](const char* title, auto value) {
        std::string s = std::string(title) + "\n";
        s += pad("arm", 13) + pad("degraded", 11) + pad("clean", 11) + "\n";
        for (const Arm arm : cfg.arms) {
            s += pad(to_string(arm), 13);
            s += pad(value(cell(table, arm, EvalSet::degraded)), 11);
            s += pad(value(cell(table, arm, EvalSet::clean)), 11);
            s += "\n";
        }
        return s + "\n";
    };
    std::string txt = "run: " + cfg.name + " (seed " + std::to_string(cfg.seed) + ")\n\n";
    txt += two_col("pose mean AP over OKS thresholds (higher is better)",
                   [](const PoseCell& c) { return fmt(c.rep.mean_ap, "%.4f"); });
    txt += two_col("pose L2 mean, px per pose (lower is better)",
                   [](const PoseCell& c) { return fmt(c.rep.l2_mean, "%.2f"); });
    txt += "gait rank-1 (higher is better)\n";
    txt += pad("source", 15) + pad("overall", 11);
    for (const auto& sc : cfg.corpus.scenarios) txt += pad(sc, 11);
    txt += "\n";
    for (const auto& name : source_order) {
        if (!sources.contains(name)) continue;
        const auto& rep = sources.at(name);
        txt += pad(name, 15) + pad(fmt(rep.at("overall_mean").get<double>(), "%.4f"), 11);
        for (const auto& sc : cfg.corpus.scenarios) {
            const auto& psm = rep.at("per_scenario_mean");
            txt += pad(psm.contains(sc) ? fmt(psm.at(sc).get<double>(), "%.4f") : "-", 11);
        }
        txt += "\n";
    }
    txt += "\nstage wall clock\n";
    for (const auto& [stage, info] : stage_runtime.items())
        txt += pad(stage, 18) + fmt(info.value("wall_s", 0.0), "%.1f") + " s\n";
    write_text(paths.report / "report.txt", txt);

    // Markdown summary.
    std::string md = "# Experiment report: " + cfg.name + "\n\nseed: " +
                     std::to_string(cfg.seed) + "\n\n";
    md += "## Pose accuracy (mean AP over OKS thresholds)\n\n| arm | degraded | clean |\n|---|---|---|\n";
    for (const Arm arm : cfg.arms)
        md += "| " + to_string(arm) + " | " +
              fmt(cell(table, arm, EvalSet::degraded).rep.mean_ap, "%.4f") + " | " +
              fmt(cell(table, arm, EvalSet::clean).rep.mean_ap, "%.4f") + " |\n";
    md += "\n## Pose L2 (mean px per pose)\n\n| arm | degraded | clean |\n|---|---|---|\n";
    for (const Arm arm : cfg.arms)
        md += "| " + to_string(arm) + " | " +
              fmt(cell(table, arm, EvalSet::degraded).rep.l2_mean, "%.2f") + " | " +
              fmt(cell(table, arm, EvalSet::clean).rep.l2_mean, "%.2f") + " |\n";
    md += "\n## Gait rank-1\n\n| source | overall |";
    for (const auto& sc : cfg.corpus.scenarios) md += " " + sc + " |";
    md += "\n|---|---|";
    for (size_t i = 0; i < cfg.corpus.scenarios.size(); ++i) md += "---|";
    md += "\n";
    for (const auto& name : source_order) {
        if (!sources.contains(name)) continue;
        const auto& rep = sources.at(name);
        md += "| " + name + " | " + fmt(rep.at("overall_mean").get<double>(), "%.4f") + " |";
        for (const auto& sc : cfg.corpus.scenarios) {
            const auto& psm = rep.at("per_scenario_mean");
            md += " " + (psm.contains(sc) ? fmt(psm.at(sc).get<double>(), "%.4f")
                                          : std::string("-")) +
                  " |";
        }
        md += "\n";
    }
    md += "\n## Stage wall clock\n\n| stage | seconds |\n|---|---|\n";
    for (const auto& [stage, info] : stage_runtime.items())
        md += "| " + stage + " | " + fmt(info.value("wall_s", 0.0), "%.1f") + " |\n";
    if (plots) {
        md += "\n## Plots\n\nOverlay grid rows: ground truth";
        for (const Arm arm : cfg.arms) md += ", " + to_string(arm);
        md += " (degraded test frames).\n";
    }
    write_text(paths.report / "summary.md", md);

    if (plots) {
        fs::create_directories(paths.report / "plots");
        for (const auto& c : table)
            save_png(render_histogram(c.rep.l2_histogram.counts, 200, 320),
                     paths.report / "plots" /
                         ("hist_" + to_string(c.arm) + "_" + to_string(c.set) + ".png"));
        render_overlay_grid(cfg, paths);
    }
}

}  // namespace poseac::pipeline
