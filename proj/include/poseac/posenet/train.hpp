#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseac/nn/convert.hpp"
#include "poseac/posenet/posenet.hpp"

namespace poseac {

struct PoseTrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double lr = 1e-2;
    double momentum = 0.9;
    double sigma = 2.0;        // target Gaussian width, heatmap cells
    double loss_scale = 1.0;   // multiplier on the heatmap MSE
    double clip_norm = 5.0;    // global gradient-norm clip; <= 0 disables
    int frames_per_epoch = 0;  // cap per epoch after shuffling; 0 = full pass
    uint64_t seed = 1;

    nlohmann::json to_json() const;
    static PoseTrainConfig from_json(const nlohmann::json& j);
};

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
};

// Teacher, base student, and fine-tune all use this loop; they differ only in
// model width, starting weights, and which frames/poses are in `data`.
std::vector<EpochLog> train_posenet(PoseNet& net, const nn::FrameStore& data,
                                    const PoseTrainConfig& cfg,
                                    const std::string& log_tag);

}  // namespace poseac
