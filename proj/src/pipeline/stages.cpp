#include "poseac/pipeline/stages.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "poseac/core/check.hpp"
#include "poseac/core/hash.hpp"
#include "poseac/nn/convert.hpp"
#include "poseac/pipeline/report.hpp"

namespace poseac::pipeline {

namespace fs = std::filesystem;

const std::vector<StageInfo>& stage_graph() {
    static const std::vector<StageInfo> g = {
        {"build-corpus", {"config"}, {"corpus/"}},
        {"train-teacher",
         {"config", "corpus/"},
         {"ckpts/teacher.ckpt", "ckpts/student_pretrained.ckpt"}},
        {"build-dataset", {"config", "corpus/", "ckpts/teacher.ckpt"}, {"dataset/"}},
        {"train-finetune",
         {"config", "dataset/", "ckpts/student_pretrained.ckpt"},
         {"ckpts/student_finetuned.ckpt"}},
        {"train-correction",
         {"config", "dataset/", "ckpts/student_pretrained.ckpt"},
         {"ckpts/corrector.ckpt"}},
        {"evaluate",
         {"config", "dataset/", "ckpts/student_pretrained.ckpt",
          "ckpts/student_finetuned.ckpt", "ckpts/corrector.ckpt"},
         {"eval/"}},
        {"gait-eval", {"config", "dataset/", "eval/"}, {"gait/"}},
        {"report", {"config", "dataset/", "eval/", "gait/"}, {"report/"}},
    };
    return g;
}

void check_stage_graph() {
    std::set<std::string> produced = {"config"};
    std::set<std::string> names;
    for (const auto& s : stage_graph()) {
        POSEAC_CHECK(names.insert(s.name).second, "duplicate stage name '", s.name, "'");
        for (const auto& in : s.inputs)
            POSEAC_CHECK(produced.count(in) == 1, "stage '", s.name, "' input '", in,
                         "' is not produced by any earlier stage");
        for (const auto& out : s.outputs) produced.insert(out);
    }
}

namespace {

const StageInfo& find_stage(const std::string& name) {
    for (const auto& s : stage_graph())
        if (s.name == name) return s;
    throw ConfigError("unknown stage: " + name);
}

bool artifact_present(const fs::path& root, const std::string& rel) {
    if (!rel.empty() && rel.back() == '/') {
        const fs::path dir = root / rel.substr(0, rel.size() - 1);
        return fs::is_directory(dir) && fs::directory_iterator(dir) != fs::directory_iterator();
    }
    return fs::exists(root / rel);
}

bool outputs_present(const fs::path& root, const StageInfo& s) {
    for (const auto& out : s.outputs)
        if (!artifact_present(root, out)) return false;
    return true;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    POSEAC_CHECK(out.good(), "cannot write ", path.string());
    out << text;
    out.flush();
    POSEAC_CHECK(out.good(), "write failed: ", path.string());
}

// Full frames with generator ground truth, for teacher/base-student training.
nn::FrameStore load_corpus_split(const fs::path& corpus_dir, Split split) {
    nn::FrameStore store;
    for (const auto& v : databuild::list_corpus_videos(corpus_dir)) {
        if (v.split != split) continue;
        const auto sample =
            synthwalk::load_sample(v.dir, v.identity_id, v.scenario, v.angle_deg);
        for (int i = 0; i < sample.n_frames; ++i)
            store.add(sample.frames[i], sample.keypoints_gt[i]);
    }
    POSEAC_CHECK(store.size() > 0, "corpus split '", to_string(split), "' is empty");
    return store;
}

gait::PoseSource arm_source(Arm arm, EvalSet set) {
    const bool hq = set == EvalSet::clean;
    switch (arm) {
        case Arm::pretrained:
            return hq ? gait::PoseSource::pretrained_hq : gait::PoseSource::pretrained_lq;
        case Arm::finetuned:
            return hq ? gait::PoseSource::finetuned_hq : gait::PoseSource::finetuned_lq;
        default:
            return hq ? gait::PoseSource::corrected_hq : gait::PoseSource::corrected_lq;
    }
}

nlohmann::json kp_json(const Pose& kp) {
    auto arr = nlohmann::json::array();
    for (const auto& p : kp) arr.push_back({p.x, p.y});
    return arr;
}

void dump_poses(const fs::path& dir, const std::vector<int>& frame_indices,
                const std::vector<Pose>& poses) {
    POSEAC_CHECK(frame_indices.size() == poses.size(), "pose dump length mismatch");
    fs::create_directories(dir);
    std::ofstream out(dir / "poses.jsonl");
    POSEAC_CHECK(out.good(), "cannot write ", (dir / "poses.jsonl").string());
    for (size_t i = 0; i < poses.size(); ++i) {
        nlohmann::json rec;
        rec["frame"] = frame_indices[i];
        rec["kp"] = kp_json(poses[i]);
        out << rec.dump() << "\n";
    }
    out.flush();
    POSEAC_CHECK(out.good(), "pose dump failed: ", dir.string());
}

std::vector<Pose> read_pose_dump(const fs::path& path, size_t expected) {
    std::ifstream in(path);
    POSEAC_CHECK(in.good(), "missing pose dump: ", path.string(),
                 " (run the evaluate stage first)");
    std::vector<Pose> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        Pose kp;
        for (const auto& p : j.at("kp"))
            kp.push_back({p.at(0).get<float>(), p.at(1).get<float>()});
        out.push_back(std::move(kp));
    }
    POSEAC_CHECK(out.size() == expected, "pose dump length mismatch: ", path.string());
    return out;
}

gait::GaitSample make_gait_sample(const databuild::DatasetRecord& rec,
                                  const std::vector<Pose>& poses, gait::PoseSource src) {
    gait::GaitSample s;
    s.pose_sequence = gait::poses_to_sequence(poses);
    s.identity_id = rec.identity_id;
    s.scenario = rec.scenario;
    s.angle_deg = rec.angle_deg;
    s.pose_source = src;
    return s;
}

}  // namespace

Runner::Runner(const RunConfig& cfg) : cfg_(cfg), paths_(cfg.out_dir) {
    cfg_.validate();
    check_stage_graph();
    fs::create_directories(paths_.root);

    const std::string lock_path = paths_.lock().string();
    lock_fd_ = ::open(lock_path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (lock_fd_ < 0)
        throw Error("run directory is locked: " + lock_path +
                    " exists (another run in progress? remove it if stale)");
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto n = ::write(lock_fd_, pid.data(), pid.size());

    try {
        config_hash_ = sha256_hex(cfg_.to_json().dump(2));
        load_state();
        write_text(paths_.config_snapshot(), cfg_.to_json().dump(2) + "\n");
    } catch (...) {
        release_lock();
        throw;
    }
}

Runner::~Runner() { release_lock(); }

void Runner::release_lock() {
    if (lock_fd_ < 0) return;
    ::close(lock_fd_);
    lock_fd_ = -1;
    std::error_code ec;
    fs::remove(paths_.lock(), ec);
}

void Runner::load_state() {
    if (fs::exists(paths_.state())) {
        std::ifstream in(paths_.state());
        POSEAC_CHECK(in.good(), "cannot read ", paths_.state().string());
        in >> state_;
        const std::string prev = state_.value("config_hash", "");
        if (prev != config_hash_)
            throw ConfigError(
                "run directory " + paths_.root.string() +
                " was produced by a different config (state hash " + prev +
                ", current " + config_hash_ + "); use a fresh --out or run name");
    } else {
        state_ = {{"config_hash", config_hash_}, {"stages", nlohmann::json::object()}};
        save_state();
    }
}

void Runner::save_state() const {
    write_text(paths_.state(), state_.dump(2) + "\n");
}

bool Runner::stage_done(const std::string& name) const {
    const auto& stages = state_.at("stages");
    return stages.contains(name) && stages.at(name).value("done", false);
}

void Runner::mark_done(const std::string& stage, double wall_s) {
    state_["stages"][stage] = {{"done", true}, {"wall_s", wall_s}};
    save_state();
}

void Runner::require_inputs(const std::string& stage) const {
    const StageInfo& info = find_stage(stage);
    std::string missing;
    for (const auto& in : info.inputs) {
        if (in == "config") continue;
        if (in == "ckpts/student_finetuned.ckpt" && !cfg_.has_arm(Arm::finetuned)) continue;
        if (in == "ckpts/corrector.ckpt" && !cfg_.has_arm(Arm::corrected)) continue;
        if (!artifact_present(paths_.root, in))
            missing += (missing.empty() ? "" : ", ") + in;
    }
    if (!missing.empty())
        throw StageError(stage, "missing input artifacts: " + missing +
                                    " (run the earlier stages or run-all)");
}

void Runner::run_stage(const std::string& name) {
    find_stage(name);
    require_inputs(name);
    std::printf("[pipeline] stage %s\n", name.c_str());
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (name == "build-corpus")
            stage_build_corpus();
        else if (name == "train-teacher")
            stage_train_teacher();
        else if (name == "build-dataset")
            stage_build_dataset();
        else if (name == "train-finetune")
            stage_train_finetune();
        else if (name == "train-correction")
            stage_train_correction();
        else if (name == "evaluate")
            stage_evaluate();
        else if (name == "gait-eval")
            stage_gait_eval();
        else
            stage_report();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    mark_done(name, wall);
    std::printf("[pipeline] stage %s done in %.1fs\n", name.c_str(), wall);
    std::fflush(stdout);
}

void Runner::run_all(bool resume) {
    bool upstream_reran = false;
    for (const auto& s : stage_graph()) {
        if (s.name == "train-finetune" && !cfg_.has_arm(Arm::finetuned)) continue;
        if (s.name == "train-correction" && !cfg_.has_arm(Arm::corrected)) continue;
        if (resume && !upstream_reran && stage_done(s.name) &&
            outputs_present(paths_.root, s)) {
            std::printf("[pipeline] stage %s already done, skipping\n", s.name.c_str());
            continue;
        }
        run_stage(s.name);
        upstream_reran = true;
    }
}

void Runner::stage_build_corpus() {
    fs::create_directories(paths_.corpus);
    synthwalk::for_each_corpus_sample(
        cfg_.corpus, derive_seed(cfg_.seed, "corpus"),
        [&](synthwalk::VideoSample&& s, Split split) {
            const fs::path dir = synthwalk::sample_dir(paths_.corpus, split, s.identity_id,
                                                       s.scenario, s.angle_deg);
            synthwalk::save_sample(s, dir);
        });
}

void Runner::stage_train_teacher() {
    fs::create_directories(paths_.ckpts);
    const nn::FrameStore data = load_corpus_split(paths_.corpus, Split::train);

    PoseNet teacher(cfg_.teacher_config());
    {
        Rng rng(derive_seed(cfg_.seed, "teacher-init"));
        teacher.init(rng);
    }
    PoseTrainConfig tcfg = cfg_.teacher_train;
    tcfg.seed = derive_seed(cfg_.seed, "teacher");
    const auto tlog = train_posenet(teacher, data, tcfg, "teacher");
    save_posenet(paths_.teacher_ckpt().string(), teacher,
                 {{"role", "teacher"},
                  {"final_loss", tlog.back().loss},
                  {"train_frames", long(data.size())}});

    PoseNet student(cfg_.student_config());
    {
        Rng rng(derive_seed(cfg_.seed, "student-init"));
        student.init(rng);
    }
    PoseTrainConfig scfg = cfg_.student_train;
    scfg.seed = derive_seed(cfg_.seed, "student");
    const auto slog = train_posenet(student, data, scfg, "student");
    save_posenet(paths_.student_pretrained_ckpt().string(), student,
                 {{"role", "student_pretrained"},
                  {"final_loss", slog.back().loss},
                  {"train_frames", long(data.size())}});
}

void Runner::stage_build_dataset() {
    fs::create_directories(paths_.dataset);
    codec::DegradationConfig deg = cfg_.degradation;
    deg.seed = derive_seed(cfg_.seed, "degrade");
    databuild::build_dataset(paths_.corpus, paths_.teacher_ckpt(), deg, cfg_.crop,
                             paths_.dataset);
}

void Runner::stage_train_finetune() {
    const auto manifest = databuild::DatasetManifest::load(paths_.manifest());
    const nn::FrameStore data = databuild::load_split(
        paths_.dataset, manifest, Split::train, databuild::PairSide::degraded);

    PoseNet net = load_posenet(paths_.student_pretrained_ckpt().string());
    PoseTrainConfig fcfg = cfg_.finetune_train;
    fcfg.seed = derive_seed(cfg_.seed, "finetune");
    const auto flog = train_posenet(net, data, fcfg, "finetune");
    save_posenet(paths_.student_finetuned_ckpt().string(), net,
                 {{"role", "student_finetuned"},
                  {"init_from", "ckpts/student_pretrained.ckpt"},
                  {"final_loss", flog.back().loss}});
}

void Runner::stage_train_correction() {
    const auto manifest = databuild::DatasetManifest::load(paths_.manifest());
    const nn::FrameStore data = databuild::load_split(
        paths_.dataset, manifest, Split::train, databuild::PairSide::degraded);

    PoseNet frozen = load_posenet(paths_.student_pretrained_ckpt().string());
    const std::string frozen_hash = nn::params_hash(frozen.params());

    Corrector corr(cfg_.corrector);
    {
        Rng rng(derive_seed(cfg_.seed, "corrector-init"));
        corr.init(rng);
    }
    CorrectorTrainConfig ccfg = cfg_.corrector_train;
    ccfg.seed = derive_seed(cfg_.seed, "corrector");
    const auto clog = train_corrector(corr, frozen, data, ccfg, "corrector");
    POSEAC_CHECK(nn::params_hash(frozen.params()) == frozen_hash,
                 "frozen pose model drifted during corrector training");
    save_corrector(paths_.corrector_ckpt().string(), corr,
                   {{"role", "corrector"},
                    {"frozen_pose_hash", frozen_hash},
                    {"final_loss", clog.back().loss}});
}

void Runner::stage_evaluate() {
    fs::create_directories(paths_.eval);
    const auto manifest = databuild::DatasetManifest::load(paths_.manifest());
    const std::string dataset_hash = sha256_tree(paths_.dataset);

    const auto clean = databuild::load_videos(paths_.dataset, manifest, Split::test,
                                              databuild::PairSide::clean);
    const auto degraded = databuild::load_videos(paths_.dataset, manifest, Split::test,
                                                 databuild::PairSide::degraded);

    PoseNet pretrained = load_posenet(paths_.student_pretrained_ckpt().string());
    const std::string pretrained_hash = sha256_file(paths_.student_pretrained_ckpt());

    std::optional<PoseNet> finetuned;
    std::string finetuned_hash;
    if (cfg_.has_arm(Arm::finetuned)) {
        finetuned = load_posenet(paths_.student_finetuned_ckpt().string());
        finetuned_hash = sha256_file(paths_.student_finetuned_ckpt());
    }
    std::optional<Corrector> corr;
    std::string corrector_hash;
    if (cfg_.has_arm(Arm::corrected)) {
        corr = load_corrector(paths_.corrector_ckpt().string());
        corrector_hash = sha256_file(paths_.corrector_ckpt());
    }

    for (const EvalSet set : {EvalSet::degraded, EvalSet::clean}) {
        const auto& videos = set == EvalSet::clean ? clean : degraded;
        for (const Arm arm : cfg_.arms) {
            const PoseNet& net = arm == Arm::finetuned ? *finetuned : pretrained;
            const std::string source = gait::to_string(arm_source(arm, set));

            std::vector<Pose> preds, gts;
            for (const auto& v : videos) {
                std::vector<Pose> vp;
                if (arm == Arm::corrected) {
                    const auto restored =
                        correct_images(*corr, v.frames, cfg_.corrector.quality_factor);
                    vp = predict_poses(net, restored);
                } else {
                    vp = predict_poses(net, v.frames);
                }
                dump_poses(paths_.poses_dir(source) / v.rec.video_id,
                           v.rec.kept_frame_indices, vp);
                preds.insert(preds.end(), vp.begin(), vp.end());
                gts.insert(gts.end(), v.gt.begin(), v.gt.end());
            }

            const EvalReport rep = evaluate_poses(preds, gts, arm, set);
            nlohmann::json j = rep.to_json();
            j["provenance"] = {
                {"model_checkpoint", arm == Arm::finetuned
                                         ? "ckpts/student_finetuned.ckpt"
                                         : "ckpts/student_pretrained.ckpt"},
                {"model_sha256", arm == Arm::finetuned ? finetuned_hash : pretrained_hash},
                {"corrector_sha256", arm == Arm::corrected ? corrector_hash : ""},
                {"dataset_sha256", dataset_hash},
                {"config_hash", config_hash_},
            };
            write_text(paths_.eval_report(arm, set), j.dump(2) + "\n");
            write_text(paths_.eval_hist_csv(arm, set), rep.histogram_csv());
            std::printf("[evaluate] %s on %s: mean_ap %.4f l2_mean %.2f (%ld poses)\n",
                        to_string(arm).c_str(), to_string(set).c_str(), rep.mean_ap,
                        rep.l2_mean, rep.n_poses);
            std::fflush(stdout);
        }
    }
}

void Runner::stage_gait_eval() {
    fs::create_directories(paths_.gait);
    const auto manifest = databuild::DatasetManifest::load(paths_.manifest());
    const std::string dataset_hash = sha256_tree(paths_.dataset);

    const auto train_vids = databuild::load_videos(
        paths_.dataset, manifest, Split::train, databuild::PairSide::clean, false);
    std::vector<gait::GaitSample> train_samples;
    train_samples.reserve(train_vids.size());
    std::set<int> train_ids;
    for (const auto& v : train_vids) {
        train_samples.push_back(
            make_gait_sample(v.rec, v.labels, gait::PoseSource::teacher_hq));
        train_ids.insert(v.rec.identity_id);
    }

    gait::GaitConfig gcfg = cfg_.gait_net;
    gcfg.n_classes = int(train_ids.size());
    gait::GaitNet net(gcfg);
    {
        Rng rng(derive_seed(cfg_.seed, "gait-init"));
        net.init(rng);
    }
    gait::GaitTrainConfig tcfg = cfg_.gait_train;
    tcfg.seed = derive_seed(cfg_.seed, "gait");
    const auto tres = gait::train_gait(net, train_samples, tcfg, "gait");
    gait::save_gait(paths_.gait_ckpt().string(), net,
                    {{"final_train_accuracy", tres.final_train_accuracy},
                     {"dataset_sha256", dataset_hash}});
    const std::string gait_hash = sha256_file(paths_.gait_ckpt());

    const auto test_vids = databuild::load_videos(
        paths_.dataset, manifest, Split::test, databuild::PairSide::clean, false);

    std::vector<gait::PoseSource> sources = {gait::PoseSource::teacher_hq};
    for (const Arm arm : cfg_.arms) {
        sources.push_back(arm_source(arm, EvalSet::degraded));
        sources.push_back(arm_source(arm, EvalSet::clean));
    }

    nlohmann::json sources_j = nlohmann::json::object();
    for (const gait::PoseSource src : sources) {
        const std::string name = gait::to_string(src);
        std::vector<gait::GaitSample> gallery, probes;
        for (const auto& v : test_vids) {
            const std::vector<Pose> poses =
                src == gait::PoseSource::teacher_hq
                    ? v.labels
                    : read_pose_dump(paths_.poses_dir(name) / v.rec.video_id /
                                         "poses.jsonl",
                                     v.labels.size());
            gait::GaitSample s = make_gait_sample(v.rec, poses, src);
            if (s.scenario == "normal") gallery.push_back(s);
            probes.push_back(std::move(s));
        }
        gait::GaitEvalReport rep = gait::evaluate_gait(net, gallery, probes);
        rep.source = src;
        sources_j[name] = rep.to_json();
        write_text(paths_.gait / (name + "_accuracy.csv"), rep.accuracy_csv());
        std::printf("[gait] %s overall rank-1 %.4f\n", name.c_str(), rep.overall_mean);
        std::fflush(stdout);
    }

    const nlohmann::json j = {
        {"sources", sources_j},
        {"train",
         {{"final_accuracy", tres.final_train_accuracy},
          {"n_classes", gcfg.n_classes}}},
        {"provenance",
         {{"gait_ckpt_sha256", gait_hash},
          {"dataset_sha256", dataset_hash},
          {"config_hash", config_hash_}}},
    };
    write_text(paths_.gait_report(), j.dump(2) + "\n");
}

void Runner::stage_report() {
    write_report(cfg_, paths_, state_.value("stages", nlohmann::json::object()),
                 cfg_.plots);
}

}  // namespace poseac::pipeline
