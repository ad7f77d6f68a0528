#include "poseac/databuild/databuild.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "poseac/core/check.hpp"
#include "poseac/core/hash.hpp"

namespace poseac::databuild {

namespace fs = std::filesystem;

nlohmann::json CropConfig::to_json() const {
    return {{"pad_frac_v", pad_frac_v},
            {"pad_frac_h", pad_frac_h},
            {"aspect_tolerance", aspect_tolerance},
            {"out_h", out_h},
            {"out_w", out_w}};
}

CropConfig CropConfig::from_json(const nlohmann::json& j) {
    CropConfig c;
    c.pad_frac_v = j.at("pad_frac_v").get<double>();
    c.pad_frac_h = j.at("pad_frac_h").get<double>();
    c.aspect_tolerance = j.at("aspect_tolerance").get<double>();
    c.out_h = j.at("out_h").get<int>();
    c.out_w = j.at("out_w").get<int>();
    return c;
}

CropBox compute_crop_box(int frame_h, int frame_w, const Pose& keypoints,
                         double pad_frac_v, double pad_frac_h) {
    POSEAC_CHECK(!keypoints.empty(), "crop box from empty pose");
    double x0 = keypoints[0].x, x1 = keypoints[0].x;
    double y0 = keypoints[0].y, y1 = keypoints[0].y;
    for (const auto& p : keypoints) {
        x0 = std::min(x0, double(p.x));
        x1 = std::max(x1, double(p.x));
        y0 = std::min(y0, double(p.y));
        y1 = std::max(y1, double(p.y));
    }
    POSEAC_CHECK((x1 - x0) * (y1 - y0) > 0.0, "degenerate keypoint bbox (area 0)");

    const double hw = (x1 - x0) / 2.0 + pad_frac_h * frame_w;
    const double hh = (y1 - y0) / 2.0 + pad_frac_v * frame_h;
    const double cx = (x0 + x1) / 2.0, cy = (y0 + y1) / 2.0;
    CropBox box;
    box.x0 = std::max(0, static_cast<int>(std::floor(cx - hw)));
    box.y0 = std::max(0, static_cast<int>(std::floor(cy - hh)));
    const int x_last = std::min(frame_w - 1, static_cast<int>(std::ceil(cx + hw)));
    const int y_last = std::min(frame_h - 1, static_cast<int>(std::ceil(cy + hh)));
    box.w = x_last - box.x0 + 1;
    box.h = y_last - box.y0 + 1;
    POSEAC_CHECK(box.w > 0 && box.h > 0, "empty crop box");
    return box;
}

CropResult crop_person(const Image& frame, const Pose& keypoints, double pad_frac_v,
                       double pad_frac_h) {
    CropResult r;
    r.box = compute_crop_box(frame.h, frame.w, keypoints, pad_frac_v, pad_frac_h);
    r.frame = crop_image(frame, r.box.x0, r.box.y0, r.box.w, r.box.h);
    r.keypoints.reserve(keypoints.size());
    for (const auto& p : keypoints)
        r.keypoints.push_back({p.x - float(r.box.x0), p.y - float(r.box.y0)});
    return r;
}

bool aspect_filter(const CropBox& box, double target_ratio, double tolerance) {
    POSEAC_CHECK(box.w > 0 && box.h > 0, "aspect_filter on empty box");
    POSEAC_CHECK(target_ratio > 0.0, "aspect target ratio must be positive");
    if (tolerance < 0.0 || std::isinf(tolerance)) return true;
    const double ratio = double(box.w) / double(box.h);
    return std::abs(ratio - target_ratio) / target_ratio <= tolerance;
}

Pose rescale_keypoints(const Pose& kp, int from_h, int from_w, int to_h, int to_w) {
    const double sx = double(to_w) / from_w;
    const double sy = double(to_h) / from_h;
    Pose out;
    out.reserve(kp.size());
    for (const auto& p : kp)
        out.push_back({float((p.x + 0.5) * sx - 0.5), float((p.y + 0.5) * sy - 0.5)});
    return out;
}

nlohmann::json DatasetManifest::to_json() const {
    nlohmann::json j;
    j["corpus_hash"] = corpus_hash;
    j["config_snapshot"] = config_snapshot;
    j["total_frames"] = total_frames;
    j["dropped_frames"] = dropped_frames;
    auto& recs = j["records"] = nlohmann::json::array();
    for (const auto& r : records) {
        recs.push_back({{"video_id", r.video_id},
                        {"identity_id", r.identity_id},
                        {"scenario", r.scenario},
                        {"angle_deg", r.angle_deg},
                        {"split", to_string(r.split)},
                        {"clean_dir", r.clean_dir},
                        {"degraded_dir", r.degraded_dir},
                        {"label_path", r.label_path},
                        {"kept_frame_indices", r.kept_frame_indices}});
    }
    return j;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
    DatasetManifest m;
    m.corpus_hash = j.at("corpus_hash").get<std::string>();
    m.config_snapshot = j.at("config_snapshot");
    m.total_frames = j.at("total_frames").get<long>();
    m.dropped_frames = j.at("dropped_frames").get<long>();
    for (const auto& e : j.at("records")) {
        DatasetRecord r;
        r.video_id = e.at("video_id").get<std::string>();
        r.identity_id = e.at("identity_id").get<int>();
        r.scenario = e.at("scenario").get<std::string>();
        r.angle_deg = e.at("angle_deg").get<int>();
        r.split = split_from_string(e.at("split").get<std::string>());
        r.clean_dir = e.at("clean_dir").get<std::string>();
        r.degraded_dir = e.at("degraded_dir").get<std::string>();
        r.label_path = e.at("label_path").get<std::string>();
        r.kept_frame_indices = e.at("kept_frame_indices").get<std::vector<int>>();
        m.records.push_back(std::move(r));
    }
    return m;
}

void DatasetManifest::save(const fs::path& path) const {
    std::ofstream out(path);
    POSEAC_CHECK(out.good(), "cannot write manifest: ", path.string());
    out << to_json().dump(2) << "\n";
    out.flush();
    POSEAC_CHECK(out.good(), "manifest write failed: ", path.string());
}

DatasetManifest DatasetManifest::load(const fs::path& path) {
    std::ifstream in(path);
    POSEAC_CHECK(in.good(), "cannot read manifest: ", path.string());
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

std::vector<CorpusVideoRef> list_corpus_videos(const fs::path& corpus_dir) {
    std::vector<CorpusVideoRef> out;
    for (Split split : {Split::train, Split::val, Split::test}) {
        const fs::path split_dir = corpus_dir / to_string(split);
        if (!fs::is_directory(split_dir)) continue;
        std::vector<int> ids;
        for (const auto& e : fs::directory_iterator(split_dir))
            if (e.is_directory()) ids.push_back(std::stoi(e.path().filename().string()));
        std::sort(ids.begin(), ids.end());
        for (int id : ids) {
            std::vector<std::string> scenarios;
            for (const auto& e : fs::directory_iterator(split_dir / std::to_string(id)))
                if (e.is_directory()) scenarios.push_back(e.path().filename().string());
            std::sort(scenarios.begin(), scenarios.end());
            for (const auto& sc : scenarios) {
                std::vector<int> angles;
                for (const auto& e :
                     fs::directory_iterator(split_dir / std::to_string(id) / sc))
                    if (e.is_directory())
                        angles.push_back(std::stoi(e.path().filename().string()));
                std::sort(angles.begin(), angles.end());
                for (int a : angles)
                    out.push_back({split, id, sc, a,
                                   split_dir / std::to_string(id) / sc /
                                       std::to_string(a)});
            }
        }
    }
    POSEAC_CHECK(!out.empty(), "no corpus videos under ", corpus_dir.string());
    return out;
}

namespace {

nlohmann::json kp_array(const Pose& kp) {
    auto arr = nlohmann::json::array();
    for (const auto& p : kp) arr.push_back({p.x, p.y});
    return arr;
}

void write_labels(const fs::path& path, const std::vector<int>& kept,
                  const std::vector<Pose>& labels, const std::vector<Pose>& gt,
                  const std::vector<CropBox>& boxes) {
    std::ofstream out(path);
    POSEAC_CHECK(out.good(), "cannot write labels: ", path.string());
    for (size_t j = 0; j < kept.size(); ++j) {
        nlohmann::json rec;
        rec["frame"] = kept[j];
        rec["kp"] = kp_array(labels[j]);
        rec["kp_gt"] = kp_array(gt[j]);
        rec["box"] = {boxes[j].x0, boxes[j].y0, boxes[j].w, boxes[j].h};
        out << rec.dump() << "\n";
    }
    out.flush();
    POSEAC_CHECK(out.good(), "label write failed: ", path.string());
}

Pose parse_kp(const nlohmann::json& arr) {
    Pose kp;
    kp.reserve(arr.size());
    for (const auto& p : arr) kp.push_back({p.at(0).get<float>(), p.at(1).get<float>()});
    return kp;
}

}  // namespace

DatasetManifest build_dataset(const fs::path& corpus_dir, const fs::path& teacher_ckpt,
                              const codec::DegradationConfig& deg, const CropConfig& crop,
                              const fs::path& out_dir) {
    deg.validate();
    PoseNet teacher = load_posenet(teacher_ckpt);
    const auto videos = list_corpus_videos(corpus_dir);

    DatasetManifest manifest;
    manifest.corpus_hash = sha256_tree(corpus_dir);
    manifest.config_snapshot = {{"crop", crop.to_json()},
                                {"quality", deg.quality},
                                {"codec", deg.codec == codec::CodecKind::builtin_dct
                                              ? "builtin_dct"
                                              : "external"}};

    const double target_ratio = double(crop.out_w) / double(crop.out_h);
    char name[32];
    for (const auto& v : videos) {
        auto sample = synthwalk::load_sample(v.dir, v.identity_id, v.scenario, v.angle_deg);
        const auto pseudo = predict_poses(teacher, sample.frames);
        const auto degraded = codec::degrade_video(sample, deg);

        DatasetRecord rec;
        rec.video_id = to_string(v.split) + "/" + std::to_string(v.identity_id) + "/" +
                       v.scenario + "/" + std::to_string(v.angle_deg);
        rec.identity_id = v.identity_id;
        rec.scenario = v.scenario;
        rec.angle_deg = v.angle_deg;
        rec.split = v.split;
        rec.clean_dir = rec.video_id + "/clean";
        rec.degraded_dir = rec.video_id + "/degraded";
        rec.label_path = rec.video_id + "/labels.jsonl";

        fs::create_directories(out_dir / rec.clean_dir);
        fs::create_directories(out_dir / rec.degraded_dir);

        std::vector<Pose> labels, gt;
        std::vector<CropBox> boxes;
        const auto to_crop = [&](const Pose& kp, const CropBox& box) {
            Pose shifted;
            shifted.reserve(kp.size());
            for (const auto& p : kp)
                shifted.push_back({p.x - float(box.x0), p.y - float(box.y0)});
            return rescale_keypoints(shifted, box.h, box.w, crop.out_h, crop.out_w);
        };
        for (int i = 0; i < sample.n_frames; ++i) {
            const CropBox box = compute_crop_box(sample.frames[i].h, sample.frames[i].w,
                                                 pseudo[i], crop.pad_frac_v,
                                                 crop.pad_frac_h);
            ++manifest.total_frames;
            if (!aspect_filter(box, target_ratio, crop.aspect_tolerance)) {
                ++manifest.dropped_frames;
                continue;
            }
            rec.kept_frame_indices.push_back(i);
            boxes.push_back(box);

            Image clean_crop = crop_image(sample.frames[i], box.x0, box.y0, box.w, box.h);
            Image deg_crop = crop_image(degraded.frames[i], box.x0, box.y0, box.w, box.h);
            clean_crop = resize_bilinear(clean_crop, crop.out_h, crop.out_w);
            deg_crop = resize_bilinear(deg_crop, crop.out_h, crop.out_w);

            labels.push_back(to_crop(pseudo[i], box));
            gt.push_back(to_crop(sample.keypoints_gt[i], box));

            std::snprintf(name, sizeof(name), "frame_%04d.png", i);
            save_png(clean_crop, out_dir / rec.clean_dir / name);
            save_png(deg_crop, out_dir / rec.degraded_dir / name);
        }
        POSEAC_CHECK(!rec.kept_frame_indices.empty(),
                     "aspect filter dropped every frame of ", rec.video_id);
        write_labels(out_dir / rec.label_path, rec.kept_frame_indices, labels, gt, boxes);
        manifest.records.push_back(std::move(rec));
    }

    manifest.save(out_dir / "manifest.json");
    return manifest;
}

std::vector<LoadedVideo> load_videos(const fs::path& dataset_dir,
                                     const DatasetManifest& manifest, Split split,
                                     PairSide side, bool want_frames) {
    std::vector<LoadedVideo> out;
    char name[32];
    for (const auto& rec : manifest.records) {
        if (rec.split != split) continue;
        LoadedVideo v;
        v.rec = rec;
        std::ifstream in(dataset_dir / rec.label_path);
        POSEAC_CHECK(in.good(), "missing labels: ", (dataset_dir / rec.label_path).string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line);
            v.labels.push_back(parse_kp(j.at("kp")));
            v.gt.push_back(parse_kp(j.at("kp_gt")));
        }
        POSEAC_CHECK(v.labels.size() == rec.kept_frame_indices.size(),
                     "label/frame count mismatch for ", rec.video_id);
        if (want_frames) {
            const std::string& dir =
                side == PairSide::clean ? rec.clean_dir : rec.degraded_dir;
            for (int idx : rec.kept_frame_indices) {
                std::snprintf(name, sizeof(name), "frame_%04d.png", idx);
                v.frames.push_back(load_png(dataset_dir / dir / name));
            }
        }
        out.push_back(std::move(v));
    }
    POSEAC_CHECK(!out.empty(), "no videos in split ", to_string(split));
    return out;
}

nn::FrameStore load_split(const fs::path& dataset_dir, const DatasetManifest& manifest,
                          Split split, PairSide side) {
    nn::FrameStore store;
    for (auto& v : load_videos(dataset_dir, manifest, split, side)) {
        for (size_t i = 0; i < v.frames.size(); ++i) store.add(v.frames[i], v.labels[i]);
    }
    return store;
}

}  // namespace poseac::databuild
