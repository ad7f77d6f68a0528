#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseac/core/pose_types.hpp"
#include "poseac/core/rng.hpp"
#include "poseac/nn/layers.hpp"

namespace poseac::gait {

// Gait sequences keep double precision: normalization must be idempotent and
// translation/scale invariant to far tighter tolerance than float allows.
using DPose = std::vector<std::array<double, 2>>;

enum class PoseSource {
    teacher_hq,      // teacher pseudo labels on clean frames
    pretrained_lq,   // base student on degraded frames
    finetuned_lq,    // fine-tuned student on degraded frames
    corrected_lq,    // base student on corrector-restored frames
    pretrained_hq,   // the same three arms run on clean frames
    finetuned_hq,
    corrected_hq,
};

std::string to_string(PoseSource s);

struct GaitSample {
    std::vector<DPose> pose_sequence;  // N frames x K x 2
    int identity_id = 0;
    std::string scenario;
    int angle_deg = 0;
    PoseSource pose_source = PoseSource::teacher_hq;
};

std::vector<DPose> poses_to_sequence(const std::vector<Pose>& poses);

// Per frame: hip-midpoint to origin, scale by torso length (hip-mid to
// shoulder-mid). Near-zero torso falls back to the keypoint-extent diagonal;
// zero extent is an error. COCO-17 joint order assumed.
std::vector<DPose> normalize_sequence(const std::vector<DPose>& seq);

struct GaitConfig {
    int n_joints = 17;
    int hidden = 64;
    int feat = 32;  // embedding = concat(mean, max) pooling -> 2*feat
    int n_classes = 0;

    int in_dim() const { return 2 * n_joints; }
    int embed_dim() const { return 2 * feat; }
    nlohmann::json to_json() const;
    static GaitConfig from_json(const nlohmann::json& j);
};

// Per-frame MLP + temporal mean/max pooling + linear classifier.
struct GaitNet {
    GaitConfig cfg;
    nn::Linear<float> l1, l2, cls;
    std::vector<int> class_ids;  // class index -> identity id

    explicit GaitNet(const GaitConfig& cfg_ = {})
        : cfg(cfg_),
          l1(cfg_.in_dim(), cfg_.hidden),
          l2(cfg_.hidden, cfg_.feat),
          cls(cfg_.embed_dim(), cfg_.n_classes > 0 ? cfg_.n_classes : 1) {}

    void init(Rng& rng) {
        l1.init_he(rng);
        l2.init_he(rng);
        cls.init_he(rng);
    }

    std::vector<nn::ParamRef<float>> params() {
        std::vector<nn::ParamRef<float>> out;
        l1.collect_params("l1", out);
        l2.collect_params("l2", out);
        cls.collect_params("cls", out);
        return out;
    }

    // Pooled embedding of a normalized sequence.
    std::vector<float> embed(const std::vector<DPose>& normalized_seq) const;
};

struct GaitTrainConfig {
    int epochs = 30;
    int batch_size = 16;  // sequences per step
    double lr = 1e-2;
    double momentum = 0.9;
    uint64_t seed = 1;

    nlohmann::json to_json() const;
    static GaitTrainConfig from_json(const nlohmann::json& j);
};

struct GaitTrainResult {
    std::vector<double> loss_curve;
    double final_train_accuracy = 0.0;
};

GaitTrainResult train_gait(GaitNet& net, const std::vector<GaitSample>& train_samples,
                           const GaitTrainConfig& cfg, const std::string& log_tag);

void save_gait(const std::string& path, GaitNet& net, const nlohmann::json& meta);
GaitNet load_gait(const std::string& path);

struct GaitEvalReport {
    PoseSource source = PoseSource::teacher_hq;
    // (probe scenario, probe angle) -> rank-1 accuracy, averaged over
    // admissible gallery angles (angle_g != angle_p).
    std::map<std::pair<std::string, int>, double> accuracy;
    std::map<std::string, double> per_scenario_mean;
    double overall_mean = 0.0;

    nlohmann::json to_json() const;
    std::string accuracy_csv() const;  // scenario x angle matrix
};

using EmbedFn = std::function<std::vector<float>(const GaitSample&)>;

// Rank-1 retrieval by cosine distance; identical probe/gallery angles are
// never compared. Throws if some probe view has no admissible gallery angle.
GaitEvalReport evaluate_gait_with(const EmbedFn& embed,
                                  const std::vector<GaitSample>& gallery,
                                  const std::vector<GaitSample>& probes);
GaitEvalReport evaluate_gait(const GaitNet& net, const std::vector<GaitSample>& gallery,
                             const std::vector<GaitSample>& probes);

}  // namespace poseac::gait
