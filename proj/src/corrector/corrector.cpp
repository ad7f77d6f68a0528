#include "poseac/corrector/corrector.hpp"

#include <cmath>

#include "poseac/core/check.hpp"
#include "poseac/nn/convert.hpp"

namespace poseac {

nlohmann::json CorrectorConfig::to_json() const {
    return {{"in_c", in_c},
            {"scales", {scales[0], scales[1], scales[2]}},
            {"quality_factor", quality_factor},
            {"skips", skips}};
}

CorrectorConfig CorrectorConfig::from_json(const nlohmann::json& j) {
    CorrectorConfig c;
    c.in_c = j.at("in_c").get<int>();
    const auto& s = j.at("scales");
    POSEAC_CHECK(s.size() == 3, "corrector scales must have 3 levels");
    for (int i = 0; i < 3; ++i) c.scales[i] = s.at(i).get<int>();
    c.quality_factor = j.at("quality_factor").get<double>();
    c.skips = j.at("skips").get<bool>();
    c.validate();
    return c;
}

void CorrectorConfig::validate() const {
    POSEAC_CHECK(quality_factor >= 0.0 && quality_factor <= 1.0,
                 "quality_factor must be in [0,1], got ", quality_factor);
    for (int s : scales) POSEAC_CHECK(s > 0, "corrector scale widths must be positive");
}

void save_corrector(const std::string& path, Corrector& net, const nlohmann::json& meta) {
    nn::Checkpoint ckpt;
    ckpt.meta = meta;
    ckpt.meta["kind"] = "corrector";
    ckpt.meta["config"] = net.cfg.to_json();
    for (const auto& p : net.params()) ckpt.tensors.emplace_back(p.name, *p.value);
    nn::save_checkpoint(path, ckpt);
}

Corrector load_corrector(const std::string& path) {
    nn::Checkpoint ckpt = nn::load_checkpoint(path);
    POSEAC_CHECK(ckpt.meta.value("kind", "") == "corrector",
                 "not a corrector checkpoint: ", path);
    Corrector net(CorrectorConfig::from_json(ckpt.meta.at("config")));
    for (auto& p : net.params()) {
        const auto& t = ckpt.get(p.name);
        POSEAC_CHECK(p.value->same_shape(t), "checkpoint shape mismatch for ", p.name);
        *p.value = t;
    }
    return net;
}

Image correct_image(const Corrector& net, const Image& frame, double quality_factor) {
    nn::Tensor<float> x(1, frame.c, frame.h, frame.w);
    nn::image_to_sample(frame, x, 0);
    Corrector::Acts acts;
    net.forward(x, float(quality_factor), acts);
    return nn::sample_to_image(acts.y, 0);
}

std::vector<Image> correct_images(const Corrector& net, const std::vector<Image>& frames,
                                  double quality_factor, int batch_size) {
    POSEAC_CHECK(batch_size > 0, "batch_size must be positive");
    std::vector<Image> out;
    out.reserve(frames.size());
    Corrector::Acts acts;
    for (size_t at = 0; at < frames.size(); at += size_t(batch_size)) {
        const int n = int(std::min(frames.size() - at, size_t(batch_size)));
        nn::Tensor<float> x(n, frames[at].c, frames[at].h, frames[at].w);
        for (int i = 0; i < n; ++i) nn::image_to_sample(frames[at + i], x, i);
        net.forward(x, float(quality_factor), acts);
        for (int i = 0; i < n; ++i) out.push_back(nn::sample_to_image(acts.y, i));
    }
    return out;
}

double loss_ac(const Pose& pred, const Pose& gt) {
    POSEAC_CHECK(pred.size() == gt.size(), "loss_ac keypoint count mismatch");
    double loss = 0.0;
    for (size_t k = 0; k < pred.size(); ++k) {
        const double dx = pred[k].x - gt[k].x;
        const double dy = pred[k].y - gt[k].y;
        POSEAC_CHECK(std::isfinite(dx) && std::isfinite(dy), "loss_ac non-finite input");
        loss += std::abs(dx) + std::abs(dy);
    }
    return loss;
}

}  // namespace poseac
