#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseac/codec/codec.hpp"
#include "poseac/core/image.hpp"
#include "poseac/core/pose_types.hpp"
#include "poseac/core/split.hpp"
#include "poseac/nn/convert.hpp"
#include "poseac/posenet/posenet.hpp"

namespace poseac::databuild {

// Pixel-index rectangle: columns [x0, x0+w), rows [y0, y0+h).
struct CropBox {
    int x0 = 0, y0 = 0, w = 0, h = 0;
    bool operator==(const CropBox&) const = default;
};

struct CropConfig {
    double pad_frac_v = 0.55;  // fraction of frame height added around the bbox
    double pad_frac_h = 0.37;
    double aspect_tolerance = 0.15;  // relative; negative or inf disables
    int out_h = 128;                 // crop resize target (model input)
    int out_w = 96;

    nlohmann::json to_json() const;
    static CropConfig from_json(const nlohmann::json& j);
};

struct CropResult {
    Image frame;
    Pose keypoints;  // translated into crop coordinates
    CropBox box;
};

// Box = keypoint extent center +- (extent/2 + pad_frac * frame_dim), snapped
// outward to whole pixels and clipped to the frame.
CropResult crop_person(const Image& frame, const Pose& keypoints, double pad_frac_v,
                       double pad_frac_h);
CropBox compute_crop_box(int frame_h, int frame_w, const Pose& keypoints,
                         double pad_frac_v, double pad_frac_h);

// Keep iff |box W/H - target| / target <= tolerance.
bool aspect_filter(const CropBox& box, double target_ratio, double tolerance);

// Pixel-center-aligned resize of crop coordinates to the output grid.
Pose rescale_keypoints(const Pose& kp, int from_h, int from_w, int to_h, int to_w);

// Corpus videos in deterministic order: split, numeric identity, lexical
// scenario, numeric angle.
struct CorpusVideoRef {
    Split split = Split::train;
    int identity_id = 0;
    std::string scenario;
    int angle_deg = 0;
    std::filesystem::path dir;
};

std::vector<CorpusVideoRef> list_corpus_videos(const std::filesystem::path& corpus_dir);

struct DatasetRecord {
    std::string video_id;  // "<split>/<identity>/<scenario>/<angle>"
    int identity_id = 0;
    std::string scenario;
    int angle_deg = 0;
    Split split = Split::train;
    std::string clean_dir;     // relative to dataset root
    std::string degraded_dir;  // ditto
    std::string label_path;    // ditto
    std::vector<int> kept_frame_indices;
};

struct DatasetManifest {
    std::vector<DatasetRecord> records;
    std::string corpus_hash;
    nlohmann::json config_snapshot;
    long total_frames = 0;
    long dropped_frames = 0;

    nlohmann::json to_json() const;
    static DatasetManifest from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static DatasetManifest load(const std::filesystem::path& path);
};

// Pseudo-label clean frames with the teacher, degrade the full frames, crop
// clean/degraded with the same pseudo-label-derived box, drop aspect-breaking
// frames, resize pairs to the model input size and persist them. Labels keep
// both the teacher poses (training targets) and the generator ground truth
// mapped through the same crop (evaluation reference).
DatasetManifest build_dataset(const std::filesystem::path& corpus_dir,
                              const std::filesystem::path& teacher_ckpt,
                              const codec::DegradationConfig& deg,
                              const CropConfig& crop,
                              const std::filesystem::path& out_dir);

enum class PairSide { clean, degraded };

struct LoadedVideo {
    DatasetRecord rec;
    std::vector<Image> frames;  // requested side, kept frames only
    std::vector<Pose> labels;   // pseudo labels in output-crop coordinates
    std::vector<Pose> gt;       // generator ground truth, same coordinates
};

std::vector<LoadedVideo> load_videos(const std::filesystem::path& dataset_dir,
                                     const DatasetManifest& manifest, Split split,
                                     PairSide side, bool want_frames = true);

// Flattened frames+labels of one split/side, for the training loops.
nn::FrameStore load_split(const std::filesystem::path& dataset_dir,
                          const DatasetManifest& manifest, Split split, PairSide side);

}  // namespace poseac::databuild
