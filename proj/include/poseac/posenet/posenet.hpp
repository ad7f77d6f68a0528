#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseac/core/pose_types.hpp"
#include "poseac/core/rng.hpp"
#include "poseac/nn/checkpoint.hpp"
#include "poseac/nn/convert.hpp"
#include "poseac/nn/heatmap.hpp"
#include "poseac/nn/layers.hpp"

namespace poseac {

// Heatmap pose estimator: two stride-2 convs down to 1/4 resolution, two
// refinement convs, a 1x1 head, per-joint spatial softmax. `widths` gives the
// four stage channel counts; the teacher uses 2x the student widths,
// everything else identical.
struct PoseNetConfig {
    int in_h = 128;
    int in_w = 96;
    int in_c = 3;
    int n_joints = 17;
    std::array<int, 4> widths = {12, 12, 24, 24};
    double softmax_temp = 1.0;

    static constexpr int stride = 4;
    int map_h() const { return in_h / stride; }
    int map_w() const { return in_w / stride; }

    nlohmann::json to_json() const;
    static PoseNetConfig from_json(const nlohmann::json& j);
};

template <class T>
struct PoseNetT {
    PoseNetConfig cfg;
    nn::Conv2d<T> c1, c2, c3, c4, head;

    struct Acts {
        nn::Tensor<T> a1, r1, a2, r2, a3, r3, a4, r4, z, probs;
    };

    explicit PoseNetT(const PoseNetConfig& cfg_ = {})
        : cfg(cfg_),
          c1(cfg_.in_c, cfg_.widths[0], 3, 2, 1),
          c2(cfg_.widths[0], cfg_.widths[1], 3, 2, 1),
          c3(cfg_.widths[1], cfg_.widths[2], 3, 1, 1),
          c4(cfg_.widths[2], cfg_.widths[3], 3, 1, 1),
          head(cfg_.widths[3], cfg_.n_joints, 1, 1, 0) {}

    void init(Rng& rng) {
        c1.init_he(rng);
        c2.init_he(rng);
        c3.init_he(rng);
        c4.init_he(rng);
        head.init_he(rng);
    }

    // Returns per-joint probability maps (n, n_joints, map_h, map_w).
    const nn::Tensor<T>& forward(const nn::Tensor<T>& x, Acts& a) const {
        c1.forward(x, a.a1);
        nn::relu_forward(a.a1, a.r1);
        c2.forward(a.r1, a.a2);
        nn::relu_forward(a.a2, a.r2);
        c3.forward(a.r2, a.a3);
        nn::relu_forward(a.a3, a.r3);
        c4.forward(a.r3, a.a4);
        nn::relu_forward(a.a4, a.r4);
        head.forward(a.r4, a.z);
        nn::spatial_softmax_forward(a.z, T(cfg.softmax_temp), a.probs);
        return a.probs;
    }

    // dx is only needed on the corrector path (gradient through the frozen
    // model back into its input); accumulate_params=false keeps this model's
    // gradients untouched on that same path.
    void backward(const nn::Tensor<T>& x, const Acts& a, const nn::Tensor<T>& dprobs,
                  nn::Tensor<T>* dx, bool accumulate_params = true) {
        nn::Tensor<T> dz, d4, d3, d2, d1, t;
        nn::spatial_softmax_backward(a.probs, dprobs, T(cfg.softmax_temp), dz);
        head.backward(a.r4, dz, &d4, accumulate_params);
        nn::relu_backward(a.a4, d4, t);
        c4.backward(a.r3, t, &d3, accumulate_params);
        nn::relu_backward(a.a3, d3, t);
        c3.backward(a.r2, t, &d2, accumulate_params);
        nn::relu_backward(a.a2, d2, t);
        c2.backward(a.r1, t, &d1, accumulate_params);
        nn::relu_backward(a.a1, d1, t);
        c1.backward(x, t, dx, accumulate_params);
    }

    std::vector<nn::ParamRef<T>> params() {
        std::vector<nn::ParamRef<T>> out;
        c1.collect_params("c1", out);
        c2.collect_params("c2", out);
        c3.collect_params("c3", out);
        c4.collect_params("c4", out);
        head.collect_params("head", out);
        return out;
    }

    std::vector<Pose> decode(const nn::Tensor<T>& probs) const {
        return nn::soft_argmax_poses(probs, T(cfg.stride));
    }
};

using PoseNet = PoseNetT<float>;

void save_posenet(const std::string& path, PoseNet& net, const nlohmann::json& meta);
PoseNet load_posenet(const std::string& path);

// Forward-only batched inference over stored frames; returns one pose per frame.
std::vector<Pose> predict_poses(const PoseNet& net, const nn::FrameStore& store,
                                int batch_size = 32);
std::vector<Pose> predict_poses(const PoseNet& net, const std::vector<Image>& frames,
                                int batch_size = 32);

}  // namespace poseac
