#include "poseac/posenet/posenet.hpp"

#include "poseac/core/check.hpp"

namespace poseac {

nlohmann::json PoseNetConfig::to_json() const {
    return {{"in_h", in_h},       {"in_w", in_w},
            {"in_c", in_c},       {"n_joints", n_joints},
            {"widths", widths},   {"softmax_temp", softmax_temp}};
}

PoseNetConfig PoseNetConfig::from_json(const nlohmann::json& j) {
    PoseNetConfig c;
    c.in_h = j.at("in_h").get<int>();
    c.in_w = j.at("in_w").get<int>();
    c.in_c = j.at("in_c").get<int>();
    c.n_joints = j.at("n_joints").get<int>();
    const auto& ws = j.at("widths");
    POSEAC_CHECK(ws.is_array() && ws.size() == 4, "posenet widths must have 4 entries");
    for (size_t i = 0; i < 4; ++i) {
        c.widths[i] = ws[i].get<int>();
        POSEAC_CHECK(c.widths[i] > 0, "posenet widths must be positive");
    }
    c.softmax_temp = j.at("softmax_temp").get<double>();
    return c;
}

void save_posenet(const std::string& path, PoseNet& net, const nlohmann::json& meta) {
    nn::Checkpoint ckpt;
    ckpt.meta = meta;
    ckpt.meta["kind"] = "posenet";
    ckpt.meta["config"] = net.cfg.to_json();
    for (const auto& p : net.params()) ckpt.tensors.emplace_back(p.name, *p.value);
    nn::save_checkpoint(path, ckpt);
}

PoseNet load_posenet(const std::string& path) {
    nn::Checkpoint ckpt = nn::load_checkpoint(path);
    POSEAC_CHECK(ckpt.meta.value("kind", "") == "posenet",
                 "not a posenet checkpoint: ", path);
    PoseNet net(PoseNetConfig::from_json(ckpt.meta.at("config")));
    for (auto& p : net.params()) {
        const auto& t = ckpt.get(p.name);
        POSEAC_CHECK(p.value->same_shape(t), "checkpoint shape mismatch for ", p.name);
        *p.value = t;
    }
    return net;
}

namespace {

template <class Fill>
std::vector<Pose> predict_impl(const PoseNet& net, size_t count, int batch_size,
                               Fill fill) {
    std::vector<Pose> out;
    out.reserve(count);
    PoseNet::Acts acts;
    for (size_t start = 0; start < count; start += batch_size) {
        const int n = static_cast<int>(std::min<size_t>(batch_size, count - start));
        nn::Tensor<float> x(n, net.cfg.in_c, net.cfg.in_h, net.cfg.in_w);
        for (int i = 0; i < n; ++i) fill(x, i, start + i);
        net.forward(x, acts);
        auto poses = net.decode(acts.probs);
        out.insert(out.end(), poses.begin(), poses.end());
    }
    return out;
}

}  // namespace

std::vector<Pose> predict_poses(const PoseNet& net, const nn::FrameStore& store,
                                int batch_size) {
    return predict_impl(net, store.size(), batch_size,
                        [&](nn::Tensor<float>& x, int slot, size_t idx) {
                            store.fill_sample(x, slot, idx);
                        });
}

std::vector<Pose> predict_poses(const PoseNet& net, const std::vector<Image>& frames,
                                int batch_size) {
    return predict_impl(net, frames.size(), batch_size,
                        [&](nn::Tensor<float>& x, int slot, size_t idx) {
                            nn::image_to_sample(frames[idx], x, slot);
                        });
}

}  // namespace poseac
