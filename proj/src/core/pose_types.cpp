#include "poseac/core/pose_types.hpp"

#include "poseac/core/check.hpp"

namespace poseac {

std::string to_string(PoseProvenance p) {
    switch (p) {
        case PoseProvenance::generator_gt: return "generator_gt";
        case PoseProvenance::teacher_pseudo: return "teacher_pseudo";
        case PoseProvenance::student_pred: return "student_pred";
        case PoseProvenance::corrected_pred: return "corrected_pred";
    }
    POSEAC_CHECK(false, "bad provenance enum");
}

const SkeletonModel& coco17_skeleton() {
    static const SkeletonModel model = [] {
        SkeletonModel m;
        m.joint_names = {
            "nose",          "left_eye",   "right_eye",     "left_ear",      "right_ear",
            "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",   "left_wrist",
            "right_wrist",   "left_hip",   "right_hip",     "left_knee",     "right_knee",
            "left_ankle",    "right_ankle",
        };
        // Tree rooted at the nose: face chain, then arms off the shoulders
        // and legs off the hips.
        m.edges = {{
            {joint::nose, joint::left_eye},
            {joint::nose, joint::right_eye},
            {joint::left_eye, joint::left_ear},
            {joint::right_eye, joint::right_ear},
            {joint::nose, joint::left_shoulder},
            {joint::nose, joint::right_shoulder},
            {joint::left_shoulder, joint::left_elbow},
            {joint::left_elbow, joint::left_wrist},
            {joint::right_shoulder, joint::right_elbow},
            {joint::right_elbow, joint::right_wrist},
            {joint::left_shoulder, joint::left_hip},
            {joint::right_shoulder, joint::right_hip},
            {joint::left_hip, joint::left_knee},
            {joint::left_knee, joint::left_ankle},
            {joint::right_hip, joint::right_knee},
            {joint::right_knee, joint::right_ankle},
        }};
        return m;
    }();
    return model;
}

const std::array<float, 17>& coco17_sigmas() {
    static const std::array<float, 17> sigmas = {
        0.026f, 0.025f, 0.025f, 0.035f, 0.035f, 0.079f, 0.079f, 0.072f, 0.072f,
        0.062f, 0.062f, 0.107f, 0.107f, 0.087f, 0.087f, 0.089f, 0.089f,
    };
    return sigmas;
}

}  // namespace poseac
