#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "poseac/core/image.hpp"
#include "poseac/core/pose_types.hpp"
#include "poseac/core/split.hpp"

namespace poseac::synthwalk {

// Per-person body geometry and gait style, derived deterministically from
// (corpus seed, identity id). Limb lengths are in pixels at the canonical
// 128px frame height and get rescaled for other frame sizes.
struct IdentityParams {
    int identity_id = 0;
    // upper_arm, forearm, thigh, shank, shoulder_half, hip_half, neck, head_radius
    std::array<float, 8> limb_lengths{};
    float torso_length = 0.f;
    float gait_frequency = 0.f;  // cycles per frame, (0, 0.2]
    float gait_phase = 0.f;      // radians
    std::array<float, 3> body_hue{};
};

struct VideoSample {
    std::vector<Image> frames;
    std::vector<Pose> keypoints_gt;
    int identity_id = 0;
    std::string scenario;
    int angle_deg = 0;
    int n_frames = 0;
    // Number of times the walk span was shrunk to keep the figure in frame.
    int translation_retries = 0;
};

inline const std::vector<std::string>& known_scenarios() {
    static const std::vector<std::string> s = {"normal", "bag", "coat"};
    return s;
}
inline const std::vector<int>& known_angles() {
    static const std::vector<int> a = {0, 45, 90, 135};
    return a;
}

IdentityParams derive_identity(uint64_t seed, int identity_id);

// Procedural value-noise background, fixed per sequence.
Image make_background(int h, int w, uint64_t seed);

// Pure renderer: stick figure defined entirely by the keypoints plus body
// params, composited over the background, then per-frame pixel noise.
// Re-rendering from stored keypoints reproduces a frame bit-exactly.
Image render_frame(const IdentityParams& params, const std::string& scenario, const Pose& kp,
                   const Image& background, uint64_t noise_seed, float scale);

VideoSample synthesize_sequence(const IdentityParams& params, const std::string& scenario,
                                int angle_deg, int n_frames, int frame_h, int frame_w,
                                uint64_t seed);

struct CorpusConfig {
    int n_identities = 20;
    std::vector<std::string> scenarios = known_scenarios();
    std::vector<int> angles = known_angles();
    int n_frames = 32;
    int frame_h = 128;
    int frame_w = 96;
};

// 80/10/10 identity partition: floor(n/10) each for val and test,
// remainder to train. Assignment order is a seeded shuffle.
std::map<int, Split> compute_splits(int n_identities, uint64_t seed);

struct Corpus {
    std::vector<VideoSample> samples;
    std::map<int, Split> split_of;
};

Corpus build_corpus(const CorpusConfig& cfg, uint64_t seed);

// Streaming variant for the pipeline: samples are produced in the same
// deterministic order and handed to the sink one by one.
void for_each_corpus_sample(const CorpusConfig& cfg, uint64_t seed,
                            const std::function<void(VideoSample&&, Split)>& sink);

// On-disk layout: <dir>/<split>/<id>/<scenario>/<angle>/frame_%04d.png
// plus keypoints.jsonl with one {"frame": i, "kp": [[x,y],...]} per line.
std::filesystem::path sample_dir(const std::filesystem::path& root, Split split, int identity_id,
                                 const std::string& scenario, int angle_deg);
void save_sample(const VideoSample& sample, const std::filesystem::path& dir);
VideoSample load_sample(const std::filesystem::path& dir, int identity_id,
                        const std::string& scenario, int angle_deg);

}  // namespace poseac::synthwalk
