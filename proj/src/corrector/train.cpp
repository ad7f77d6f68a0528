#include "poseac/corrector/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "poseac/core/check.hpp"
#include "poseac/nn/losses.hpp"
#include "poseac/nn/optim.hpp"

namespace poseac {

nlohmann::json CorrectorTrainConfig::to_json() const {
    return {{"epochs", epochs},
            {"batch_size", batch_size},
            {"lr", lr},
            {"momentum", momentum},
            {"quality_factor", quality_factor},
            {"clip_norm", clip_norm},
            {"frames_per_epoch", frames_per_epoch},
            {"seed", seed}};
}

CorrectorTrainConfig CorrectorTrainConfig::from_json(const nlohmann::json& j) {
    CorrectorTrainConfig c;
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.lr = j.at("lr").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.quality_factor = j.at("quality_factor").get<double>();
    c.clip_norm = j.at("clip_norm").get<double>();
    c.frames_per_epoch = j.at("frames_per_epoch").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

std::vector<EpochLog> train_corrector(Corrector& net, PoseNet& frozen_pose,
                                      const nn::FrameStore& data,
                                      const CorrectorTrainConfig& cfg,
                                      const std::string& log_tag) {
    POSEAC_CHECK(data.size() >= static_cast<size_t>(cfg.batch_size),
                 "corrector training set smaller than one batch");
    POSEAC_CHECK(cfg.quality_factor >= 0.0 && cfg.quality_factor <= 1.0,
                 "quality_factor must be in [0,1]");

    const std::string frozen_hash = nn::params_hash(frozen_pose.params());

    auto params = net.params();
    nn::SgdMomentum<float> opt(params, float(cfg.lr), float(cfg.momentum));
    Rng rng(derive_seed(cfg.seed, "train-corrector"));

    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t{0});

    const int bs = cfg.batch_size;
    const auto& pcfg = frozen_pose.cfg;
    nn::Tensor<float> x(bs, net.cfg.in_c, data.h, data.w);
    nn::Tensor<float> dprobs(bs, pcfg.n_joints, pcfg.map_h(), pcfg.map_w());
    nn::Tensor<float> dcorrected, coords, target_coords, dcoords;
    Corrector::Acts cacts;
    PoseNet::Acts pacts;
    std::vector<Pose> batch_gt(bs);

    std::vector<EpochLog> logs;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        size_t count = order.size();
        if (cfg.frames_per_epoch > 0)
            count = std::min(count, static_cast<size_t>(cfg.frames_per_epoch));
        const size_t n_batches = count / bs;
        POSEAC_CHECK(n_batches > 0, "frames_per_epoch below one batch");

        double epoch_loss = 0.0;
        for (size_t bi = 0; bi < n_batches; ++bi) {
            for (int i = 0; i < bs; ++i) {
                const size_t idx = order[bi * bs + i];
                data.fill_sample(x, i, idx);
                batch_gt[i] = data.poses[idx];
            }
            net.forward(x, float(cfg.quality_factor), cacts);
            frozen_pose.forward(cacts.y, pacts);
            nn::soft_argmax(pacts.probs, float(pcfg.stride), coords);
            nn::poses_to_coords(batch_gt, target_coords);

            opt.zero_grad();
            const double loss = nn::l1_coord_loss(coords, target_coords, dcoords);
            POSEAC_CHECK(std::isfinite(loss), "corrector training diverged (loss=",
                         loss, ") at epoch ", epoch);
            epoch_loss += loss;

            dprobs.zero();
            nn::soft_argmax_backward(dcoords, float(pcfg.stride), dprobs);
            frozen_pose.backward(cacts.y, pacts, dprobs, &dcorrected,
                                 /*accumulate_params=*/false);
            net.backward(cacts, dcorrected, /*accumulate_params=*/true);
            nn::clip_grad_norm(params, cfg.clip_norm);
            opt.step();
        }
        epoch_loss /= double(n_batches);
        POSEAC_CHECK(nn::params_hash(frozen_pose.params()) == frozen_hash,
                     "frozen pose model drifted during corrector training (epoch ",
                     epoch, ")");
        logs.push_back({epoch, epoch_loss});
        std::printf("[%s] epoch %d/%d loss %.4f\n", log_tag.c_str(), epoch + 1,
                    cfg.epochs, epoch_loss);
        std::fflush(stdout);
    }
    return logs;
}

double mean_loss_ac(const Corrector* corr, const PoseNet& pose,
                    const nn::FrameStore& data, double quality_factor,
                    int batch_size) {
    POSEAC_CHECK(data.size() > 0, "mean_loss_ac on empty set");
    Corrector::Acts cacts;
    PoseNet::Acts pacts;
    double total = 0.0;
    for (size_t start = 0; start < data.size(); start += batch_size) {
        const int n = static_cast<int>(std::min<size_t>(batch_size, data.size() - start));
        nn::Tensor<float> x(n, data.c, data.h, data.w);
        for (int i = 0; i < n; ++i) data.fill_sample(x, i, start + i);
        const nn::Tensor<float>* input = &x;
        if (corr) {
            corr->forward(x, float(quality_factor), cacts);
            input = &cacts.y;
        }
        pose.forward(*input, pacts);
        auto coords = pose.decode(pacts.probs);
        for (int i = 0; i < n; ++i) total += loss_ac(coords[i], data.poses[start + i]);
    }
    return total / double(data.size());
}

}  // namespace poseac
