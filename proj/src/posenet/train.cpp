#include "poseac/posenet/train.hpp"

#include <cstdio>
#include <numeric>

#include "poseac/core/check.hpp"
#include "poseac/nn/losses.hpp"
#include "poseac/nn/optim.hpp"

namespace poseac {

nlohmann::json PoseTrainConfig::to_json() const {
    return {{"epochs", epochs},
            {"batch_size", batch_size},
            {"lr", lr},
            {"momentum", momentum},
            {"sigma", sigma},
            {"loss_scale", loss_scale},
            {"clip_norm", clip_norm},
            {"frames_per_epoch", frames_per_epoch},
            {"seed", seed}};
}

PoseTrainConfig PoseTrainConfig::from_json(const nlohmann::json& j) {
    PoseTrainConfig c;
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.lr = j.at("lr").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.sigma = j.at("sigma").get<double>();
    c.loss_scale = j.at("loss_scale").get<double>();
    c.clip_norm = j.at("clip_norm").get<double>();
    c.frames_per_epoch = j.at("frames_per_epoch").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

std::vector<EpochLog> train_posenet(PoseNet& net, const nn::FrameStore& data,
                                    const PoseTrainConfig& cfg,
                                    const std::string& log_tag) {
    POSEAC_CHECK(data.size() >= static_cast<size_t>(cfg.batch_size),
                 "training set smaller than one batch (", data.size(), " frames)");
    POSEAC_CHECK(data.h == net.cfg.in_h && data.w == net.cfg.in_w,
                 "training frames ", data.w, "x", data.h, " do not match model input");

    auto params = net.params();
    nn::SgdMomentum<float> opt(params, float(cfg.lr), float(cfg.momentum));
    Rng rng(derive_seed(cfg.seed, "train-posenet"));

    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t{0});

    const int bs = cfg.batch_size;
    nn::Tensor<float> x(bs, net.cfg.in_c, net.cfg.in_h, net.cfg.in_w);
    nn::Tensor<float> target(bs, net.cfg.n_joints, net.cfg.map_h(), net.cfg.map_w());
    nn::Tensor<float> dprobs(bs, net.cfg.n_joints, net.cfg.map_h(), net.cfg.map_w());
    PoseNet::Acts acts;

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
                for (int k = 0; k < net.cfg.n_joints; ++k)
                    nn::render_gaussian_target(target, i, k, data.poses[idx][k],
                                               float(net.cfg.stride), float(cfg.sigma));
            }
            net.forward(x, acts);
            opt.zero_grad();
            const double loss = nn::heatmap_mse(acts.probs, target, dprobs,
                                                float(cfg.loss_scale));
            POSEAC_CHECK(std::isfinite(loss), "pose training diverged (loss=", loss,
                         ") at epoch ", epoch);
            epoch_loss += loss;
            net.backward(x, acts, dprobs, nullptr, true);
            nn::clip_grad_norm(params, cfg.clip_norm);
            opt.step();
        }
        epoch_loss /= double(n_batches);
        logs.push_back({epoch, epoch_loss});
        std::printf("[%s] epoch %d/%d loss %.6f\n", log_tag.c_str(), epoch + 1,
                    cfg.epochs, epoch_loss);
        std::fflush(stdout);
    }
    return logs;
}

}  // namespace poseac
