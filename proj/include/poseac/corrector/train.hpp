#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseac/corrector/corrector.hpp"
#include "poseac/nn/convert.hpp"
#include "poseac/posenet/posenet.hpp"
#include "poseac/posenet/train.hpp"

namespace poseac {

struct CorrectorTrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double lr = 1e-2;
    double momentum = 0.9;
    double quality_factor = 0.5;
    double clip_norm = 5.0;  // global gradient-norm clip; <= 0 disables
    int frames_per_epoch = 0;
    uint64_t seed = 1;

    nlohmann::json to_json() const;
    static CorrectorTrainConfig from_json(const nlohmann::json& j);
};

// Trains the corrector against keypoint L1 through `frozen_pose`. The pose
// model's parameter hash is asserted unchanged every epoch; any drift is a
// hard error. `data` holds degraded frames paired with pseudo-label poses.
std::vector<EpochLog> train_corrector(Corrector& net, PoseNet& frozen_pose,
                                      const nn::FrameStore& data,
                                      const CorrectorTrainConfig& cfg,
                                      const std::string& log_tag);

// Mean per-frame keypoint L1 of `pose` predictions vs stored poses; frames
// are passed through `corr` first when non-null, otherwise used as-is.
double mean_loss_ac(const Corrector* corr, const PoseNet& pose,
                    const nn::FrameStore& data, double quality_factor,
                    int batch_size = 32);

}  // namespace poseac
