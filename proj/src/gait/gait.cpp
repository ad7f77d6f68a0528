#include "poseac/gait/gait.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "poseac/core/check.hpp"
#include "poseac/nn/checkpoint.hpp"
#include "poseac/nn/losses.hpp"
#include "poseac/nn/optim.hpp"

namespace poseac::gait {

std::string to_string(PoseSource s) {
    switch (s) {
        case PoseSource::teacher_hq: return "teacher_hq";
        case PoseSource::pretrained_lq: return "pretrained_lq";
        case PoseSource::finetuned_lq: return "finetuned_lq";
        case PoseSource::corrected_lq: return "corrected_lq";
        case PoseSource::pretrained_hq: return "pretrained_hq";
        case PoseSource::finetuned_hq: return "finetuned_hq";
        case PoseSource::corrected_hq: return "corrected_hq";
    }
    throw Error("bad pose source enum");
}

std::vector<DPose> poses_to_sequence(const std::vector<Pose>& poses) {
    std::vector<DPose> seq;
    seq.reserve(poses.size());
    for (const auto& p : poses) {
        DPose d(p.size());
        for (size_t k = 0; k < p.size(); ++k) d[k] = {double(p[k].x), double(p[k].y)};
        seq.push_back(std::move(d));
    }
    return seq;
}

std::vector<DPose> normalize_sequence(const std::vector<DPose>& seq) {
    std::vector<DPose> out;
    out.reserve(seq.size());
    for (const auto& frame : seq) {
        POSEAC_CHECK(frame.size() == 17, "normalize_sequence expects COCO-17 poses");
        for (const auto& p : frame)
            POSEAC_CHECK(std::isfinite(p[0]) && std::isfinite(p[1]),
                         "non-finite keypoint in gait sequence");
        const double hx = (frame[joint::left_hip][0] + frame[joint::right_hip][0]) / 2.0;
        const double hy = (frame[joint::left_hip][1] + frame[joint::right_hip][1]) / 2.0;
        const double sx =
            (frame[joint::left_shoulder][0] + frame[joint::right_shoulder][0]) / 2.0;
        const double sy =
            (frame[joint::left_shoulder][1] + frame[joint::right_shoulder][1]) / 2.0;
        double scale = std::hypot(sx - hx, sy - hy);
        if (scale < 1e-6) {
            double x0 = frame[0][0], x1 = frame[0][0], y0 = frame[0][1], y1 = frame[0][1];
            for (const auto& p : frame) {
                x0 = std::min(x0, p[0]);
                x1 = std::max(x1, p[0]);
                y0 = std::min(y0, p[1]);
                y1 = std::max(y1, p[1]);
            }
            scale = std::hypot(x1 - x0, y1 - y0);
            POSEAC_CHECK(scale > 0.0, "cannot normalize all-identical keypoints");
        }
        DPose nf(frame.size());
        for (size_t k = 0; k < frame.size(); ++k)
            nf[k] = {(frame[k][0] - hx) / scale, (frame[k][1] - hy) / scale};
        out.push_back(std::move(nf));
    }
    return out;
}

nlohmann::json GaitConfig::to_json() const {
    return {{"n_joints", n_joints}, {"hidden", hidden}, {"feat", feat},
            {"n_classes", n_classes}};
}

GaitConfig GaitConfig::from_json(const nlohmann::json& j) {
    GaitConfig c;
    c.n_joints = j.at("n_joints").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.feat = j.at("feat").get<int>();
    c.n_classes = j.at("n_classes").get<int>();
    return c;
}

nlohmann::json GaitTrainConfig::to_json() const {
    return {{"epochs", epochs},
            {"batch_size", batch_size},
            {"lr", lr},
            {"momentum", momentum},
            {"seed", seed}};
}

GaitTrainConfig GaitTrainConfig::from_json(const nlohmann::json& j) {
    GaitTrainConfig c;
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.lr = j.at("lr").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

namespace {

void sequence_to_rows(const std::vector<DPose>& seq, nn::Tensor<float>& x) {
    const int n = static_cast<int>(seq.size());
    const int k = static_cast<int>(seq[0].size());
    x = nn::Tensor<float>(n, 2 * k, 1, 1);
    for (int t = 0; t < n; ++t)
        for (int j = 0; j < k; ++j) {
            x.sample(t)[2 * j] = float(seq[t][j][0]);
            x.sample(t)[2 * j + 1] = float(seq[t][j][1]);
        }
}

struct SeqActs {
    nn::Tensor<float> x, a1, r1, a2, r2;     // per-frame
    nn::Tensor<float> embed;                  // (1, 2*feat, 1, 1)
    std::vector<int> argmax;                  // winning frame per feature
};

// Per-frame MLP features, then temporal mean/max pooling into one embedding.
void forward_sequence(const GaitNet& net, const std::vector<DPose>& seq, SeqActs& a) {
    sequence_to_rows(seq, a.x);
    net.l1.forward(a.x, a.a1);
    nn::relu_forward(a.a1, a.r1);
    net.l2.forward(a.r1, a.a2);
    nn::relu_forward(a.a2, a.r2);

    const int n = a.r2.n, f = net.cfg.feat;
    a.embed = nn::Tensor<float>(1, 2 * f, 1, 1);
    a.argmax.assign(f, 0);
    for (int j = 0; j < f; ++j) {
        float sum = 0.f, mx = a.r2.sample(0)[j];
        int arg = 0;
        for (int t = 0; t < n; ++t) {
            const float v = a.r2.sample(t)[j];
            sum += v;
            if (v > mx) {
                mx = v;
                arg = t;
            }
        }
        a.embed.v[j] = sum / float(n);
        a.embed.v[f + j] = mx;
        a.argmax[j] = arg;
    }
}

void backward_sequence(GaitNet& net, const SeqActs& a, const nn::Tensor<float>& dembed) {
    const int n = a.r2.n, f = net.cfg.feat;
    nn::Tensor<float> dr2(n, f, 1, 1);
    for (int j = 0; j < f; ++j) {
        const float dmean = dembed.v[j] / float(n);
        for (int t = 0; t < n; ++t) dr2.sample(t)[j] = dmean;
        dr2.sample(a.argmax[j])[j] += dembed.v[f + j];
    }
    nn::Tensor<float> da2, dr1, da1;
    nn::relu_backward(a.a2, dr2, da2);
    net.l2.backward(a.r1, da2, &dr1);
    nn::relu_backward(a.a1, dr1, da1);
    net.l1.backward(a.x, da1, nullptr);
}

}  // namespace

std::vector<float> GaitNet::embed(const std::vector<DPose>& normalized_seq) const {
    SeqActs a;
    forward_sequence(*this, normalized_seq, a);
    return std::vector<float>(a.embed.v.begin(), a.embed.v.end());
}

GaitTrainResult train_gait(GaitNet& net, const std::vector<GaitSample>& train_samples,
                           const GaitTrainConfig& cfg, const std::string& log_tag) {
    POSEAC_CHECK(!train_samples.empty(), "no gait training samples");

    std::set<int> id_set;
    for (const auto& s : train_samples) id_set.insert(s.identity_id);
    POSEAC_CHECK(id_set.size() >= 2, "gait training needs at least 2 identities");
    net.class_ids.assign(id_set.begin(), id_set.end());
    POSEAC_CHECK(net.cfg.n_classes == static_cast<int>(net.class_ids.size()),
                 "GaitConfig.n_classes (", net.cfg.n_classes, ") != identities (",
                 net.class_ids.size(), ")");
    std::map<int, int> class_of;
    for (size_t i = 0; i < net.class_ids.size(); ++i)
        class_of[net.class_ids[i]] = static_cast<int>(i);

    std::vector<std::vector<DPose>> normalized;
    std::vector<int> labels;
    normalized.reserve(train_samples.size());
    for (const auto& s : train_samples) {
        normalized.push_back(normalize_sequence(s.pose_sequence));
        labels.push_back(class_of.at(s.identity_id));
    }

    auto params = net.params();
    nn::SgdMomentum<float> opt(params, float(cfg.lr), float(cfg.momentum));
    Rng rng(derive_seed(cfg.seed, "train-gait"));
    std::vector<size_t> order(train_samples.size());
    std::iota(order.begin(), order.end(), size_t{0});

    SeqActs acts;
    nn::Tensor<float> logits, dlogits, dembed;
    GaitTrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        long correct = 0;
        size_t done = 0;
        while (done < order.size()) {
            const size_t take = std::min<size_t>(cfg.batch_size, order.size() - done);
            opt.zero_grad();
            for (size_t b = 0; b < take; ++b) {
                const size_t idx = order[done + b];
                forward_sequence(net, normalized[idx], acts);
                net.cls.forward(acts.embed, logits);
                dlogits = nn::Tensor<float>(1, net.cfg.n_classes, 1, 1);
                epoch_loss += nn::softmax_cross_entropy(
                    logits, std::vector<int>{labels[idx]}, dlogits);
                int best = 0;
                for (int c = 1; c < net.cfg.n_classes; ++c)
                    if (logits.v[c] > logits.v[best]) best = c;
                if (best == labels[idx]) ++correct;
                net.cls.backward(acts.embed, dlogits, &dembed);
                backward_sequence(net, acts, dembed);
            }
            opt.step();
            done += take;
        }
        epoch_loss /= double(order.size());
        POSEAC_CHECK(std::isfinite(epoch_loss), "gait training diverged at epoch ", epoch);
        result.loss_curve.push_back(epoch_loss);
        result.final_train_accuracy = double(correct) / double(order.size());
        std::printf("[%s] epoch %d/%d loss %.4f acc %.3f\n", log_tag.c_str(), epoch + 1,
                    cfg.epochs, epoch_loss, result.final_train_accuracy);
        std::fflush(stdout);
    }
    return result;
}

void save_gait(const std::string& path, GaitNet& net, const nlohmann::json& meta) {
    nn::Checkpoint ckpt;
    ckpt.meta = meta;
    ckpt.meta["kind"] = "gait";
    ckpt.meta["config"] = net.cfg.to_json();
    ckpt.meta["class_ids"] = net.class_ids;
    for (const auto& p : net.params()) ckpt.tensors.emplace_back(p.name, *p.value);
    nn::save_checkpoint(path, ckpt);
}

GaitNet load_gait(const std::string& path) {
    nn::Checkpoint ckpt = nn::load_checkpoint(path);
    POSEAC_CHECK(ckpt.meta.value("kind", "") == "gait", "not a gait checkpoint: ", path);
    GaitNet net(GaitConfig::from_json(ckpt.meta.at("config")));
    net.class_ids = ckpt.meta.at("class_ids").get<std::vector<int>>();
    for (auto& p : net.params()) {
        const auto& t = ckpt.get(p.name);
        POSEAC_CHECK(p.value->same_shape(t), "checkpoint shape mismatch for ", p.name);
        *p.value = t;
    }
    return net;
}

namespace {

double cosine_distance(const std::vector<float>& a, const std::vector<float>& b) {
    POSEAC_CHECK(a.size() == b.size(), "embedding size mismatch");
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += double(a[i]) * b[i];
        na += double(a[i]) * a[i];
        nb += double(b[i]) * b[i];
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    if (denom <= 0.0) return 1.0;  // zero embedding: maximally distant
    return 1.0 - dot / denom;
}

}  // namespace

GaitEvalReport evaluate_gait_with(const EmbedFn& embed,
                                  const std::vector<GaitSample>& gallery,
                                  const std::vector<GaitSample>& probes) {
    POSEAC_CHECK(!gallery.empty() && !probes.empty(), "empty gallery or probe set");

    std::map<int, std::vector<std::pair<int, std::vector<float>>>> gallery_by_angle;
    for (const auto& g : gallery)
        gallery_by_angle[g.angle_deg].emplace_back(g.identity_id, embed(g));

    std::vector<std::vector<float>> probe_emb;
    probe_emb.reserve(probes.size());
    for (const auto& p : probes) probe_emb.push_back(embed(p));

    std::set<std::pair<std::string, int>> probe_views;
    for (const auto& p : probes) probe_views.insert({p.scenario, p.angle_deg});

    GaitEvalReport report;
    report.source = probes.front().pose_source;
    for (const auto& view : probe_views) {
        const auto& [scenario_p, angle_p] = view;
        double view_acc = 0.0;
        int n_gallery_views = 0;
        for (const auto& [angle_g, entries] : gallery_by_angle) {
            if (angle_g == angle_p) continue;  // identical views never compared
            long hits = 0, total = 0;
            for (size_t i = 0; i < probes.size(); ++i) {
                if (probes[i].scenario != scenario_p || probes[i].angle_deg != angle_p)
                    continue;
                double best = 0.0;
                int best_id = 0;
                bool first = true;
                for (const auto& [gid, gemb] : entries) {
                    const double d = cosine_distance(probe_emb[i], gemb);
                    if (first || d < best) {
                        best = d;
                        best_id = gid;
                        first = false;
                    }
                }
                ++total;
                if (best_id == probes[i].identity_id) ++hits;
            }
            view_acc += double(hits) / double(total);
            ++n_gallery_views;
        }
        POSEAC_CHECK(n_gallery_views > 0, "no admissible gallery angle for probe view (",
                     scenario_p, ", ", angle_p, ")");
        report.accuracy[view] = view_acc / double(n_gallery_views);
    }

    std::map<std::string, std::pair<double, int>> by_scenario;
    for (const auto& [view, acc] : report.accuracy) {
        by_scenario[view.first].first += acc;
        by_scenario[view.first].second += 1;
    }
    double overall = 0.0;
    for (const auto& [sc, agg] : by_scenario) {
        report.per_scenario_mean[sc] = agg.first / agg.second;
        overall += report.per_scenario_mean[sc];
    }
    report.overall_mean = overall / double(by_scenario.size());
    return report;
}

GaitEvalReport evaluate_gait(const GaitNet& net, const std::vector<GaitSample>& gallery,
                             const std::vector<GaitSample>& probes) {
    return evaluate_gait_with(
        [&net](const GaitSample& s) {
            return net.embed(normalize_sequence(s.pose_sequence));
        },
        gallery, probes);
}

nlohmann::json GaitEvalReport::to_json() const {
    nlohmann::json j;
    j["source"] = to_string(source);
    j["overall_mean"] = overall_mean;
    auto& acc = j["accuracy"] = nlohmann::json::array();
    for (const auto& [view, a] : accuracy)
        acc.push_back({{"scenario", view.first}, {"angle", view.second}, {"rank1", a}});
    j["per_scenario_mean"] = per_scenario_mean;
    return j;
}

std::string GaitEvalReport::accuracy_csv() const {
    std::set<int> angles;
    std::set<std::string> scenarios;
    for (const auto& [view, _] : accuracy) {
        scenarios.insert(view.first);
        angles.insert(view.second);
    }
    std::string csv = "scenario";
    for (int a : angles) csv += "," + std::to_string(a);
    csv += "\n";
    for (const auto& sc : scenarios) {
        csv += sc;
        for (int a : angles) {
            auto it = accuracy.find({sc, a});
            csv += ",";
            csv += it == accuracy.end() ? "" : std::to_string(it->second);
        }
        csv += "\n";
    }
    return csv;
}

}  // namespace poseac::gait
