#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace poseac {

struct Vec2 {
    float x = 0.f;
    float y = 0.f;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(float s, Vec2 a) { return {s * a.x, s * a.y}; }

// One body configuration: K keypoints in pixel coordinates.
using Pose = std::vector<Vec2>;

// Where a pose came from, tracked through the whole pipeline.
enum class PoseProvenance {
    generator_gt,
    teacher_pseudo,
    student_pred,
    corrected_pred,
};

std::string to_string(PoseProvenance p);

// Per-frame poses for one video.
struct PoseSequence {
    std::vector<Pose> keypoints;
    PoseProvenance provenance = PoseProvenance::generator_gt;
};

// COCO-17 joint layout shared by the generator, the pose nets and the
// metrics. Edges are (parent, child) pairs forming a tree.
struct SkeletonModel {
    std::vector<std::string> joint_names;
    std::vector<std::array<int, 2>> edges;
    int n_joints() const { return static_cast<int>(joint_names.size()); }
};

const SkeletonModel& coco17_skeleton();

// COCO keypoint falloff constants, same order as coco17_skeleton().
const std::array<float, 17>& coco17_sigmas();

namespace joint {
// Indices into the COCO-17 layout.
enum : int {
    nose = 0,
    left_eye,
    right_eye,
    left_ear,
    right_ear,
    left_shoulder,
    right_shoulder,
    left_elbow,
    right_elbow,
    left_wrist,
    right_wrist,
    left_hip,
    right_hip,
    left_knee,
    right_knee,
    left_ankle,
    right_ankle,
};
}

}  // namespace poseac
