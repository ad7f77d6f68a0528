#include "poseac/pipeline/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "poseac/core/check.hpp"

namespace poseac::pipeline {

namespace {

void check_keys(const nlohmann::json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
    POSEAC_CHECK(j.is_object(), "config section '", section, "' must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
                return key == a;
            }) == allowed.end())
            throw ConfigError("unknown key '" + key + "' in config section '" + section +
                              "'");
    }
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad value for config key '") + key +
                          "': " + e.what());
    }
}

void parse_pose_train(const nlohmann::json& j, const std::string& section,
                      PoseTrainConfig& out) {
    check_keys(j, section,
               {"epochs", "batch_size", "lr", "momentum", "sigma", "loss_scale",
                "clip_norm", "frames_per_epoch"});
    out.epochs = get_or(j, "epochs", out.epochs);
    out.batch_size = get_or(j, "batch_size", out.batch_size);
    out.lr = get_or(j, "lr", out.lr);
    out.momentum = get_or(j, "momentum", out.momentum);
    out.sigma = get_or(j, "sigma", out.sigma);
    out.loss_scale = get_or(j, "loss_scale", out.loss_scale);
    out.clip_norm = get_or(j, "clip_norm", out.clip_norm);
    out.frames_per_epoch = get_or(j, "frames_per_epoch", out.frames_per_epoch);
}

nlohmann::json pose_train_json(const PoseTrainConfig& c) {
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lr", c.lr},
            {"momentum", c.momentum},
            {"sigma", c.sigma},
            {"loss_scale", c.loss_scale},
            {"clip_norm", c.clip_norm},
            {"frames_per_epoch", c.frames_per_epoch}};
}

void check_train_common(const std::string& section, int epochs, int batch_size,
                        double lr, double momentum) {
    POSEAC_CHECK(epochs >= 1, section, ".epochs must be >= 1");
    POSEAC_CHECK(batch_size >= 1, section, ".batch_size must be >= 1");
    POSEAC_CHECK(lr > 0.0, section, ".lr must be positive");
    POSEAC_CHECK(momentum >= 0.0 && momentum < 1.0, section,
                 ".momentum must be in [0,1)");
}

}  // namespace

PoseNetConfig RunConfig::student_config() const {
    PoseNetConfig c;
    c.in_h = corpus.frame_h;
    c.in_w = corpus.frame_w;
    c.n_joints = 17;
    c.widths = student_widths;
    c.softmax_temp = softmax_temp;
    return c;
}

PoseNetConfig RunConfig::teacher_config() const {
    PoseNetConfig c = student_config();
    for (int& w : c.widths) w *= teacher_width_mult;
    return c;
}

bool RunConfig::has_arm(Arm a) const {
    return std::find(arms.begin(), arms.end(), a) != arms.end();
}

void RunConfig::validate() const {
    try {
        POSEAC_CHECK(!name.empty() && name.find('/') == std::string::npos,
                     "run name must be non-empty and slash-free");
        POSEAC_CHECK(!arms.empty(), "arms must be non-empty");
        std::set<Arm> uniq(arms.begin(), arms.end());
        POSEAC_CHECK(uniq.size() == arms.size(), "arms must be unique");

        POSEAC_CHECK(corpus.n_identities >= 10,
                     "corpus.n_identities must be >= 10 for the 80/10/10 split");
        POSEAC_CHECK(!corpus.scenarios.empty(), "corpus.scenarios must be non-empty");
        std::set<std::string> sc(corpus.scenarios.begin(), corpus.scenarios.end());
        POSEAC_CHECK(sc.size() == corpus.scenarios.size(), "duplicate scenario");
        for (const auto& s : corpus.scenarios)
            POSEAC_CHECK(std::find(synthwalk::known_scenarios().begin(),
                                   synthwalk::known_scenarios().end(),
                                   s) != synthwalk::known_scenarios().end(),
                         "unknown scenario '", s, "'");
        POSEAC_CHECK(sc.count("normal") == 1,
                     "corpus.scenarios must include 'normal' (gait gallery)");
        POSEAC_CHECK(corpus.angles.size() >= 2, "need >= 2 angles (gait exclusion rule)");
        std::set<int> an(corpus.angles.begin(), corpus.angles.end());
        POSEAC_CHECK(an.size() == corpus.angles.size(), "duplicate angle");
        for (int a : corpus.angles)
            POSEAC_CHECK(a >= 0 && a < 180, "angle out of [0,180): ", a);
        POSEAC_CHECK(corpus.n_frames >= 4, "corpus.n_frames must be >= 4");
        POSEAC_CHECK(corpus.frame_h >= 64 && corpus.frame_h % 8 == 0,
                     "frame_h must be >= 64 and a multiple of 8");
        POSEAC_CHECK(corpus.frame_w >= 48 && corpus.frame_w % 8 == 0,
                     "frame_w must be >= 48 and a multiple of 8");

        degradation.validate();
        POSEAC_CHECK(crop.pad_frac_v >= 0.0 && crop.pad_frac_h >= 0.0,
                     "crop pad fractions must be >= 0");
        POSEAC_CHECK(crop.out_h == corpus.frame_h && crop.out_w == corpus.frame_w,
                     "crop output size is derived from the corpus frame size");

        for (int w : student_widths)
            POSEAC_CHECK(w >= 2, "posenet.student_widths entries must be >= 2");
        POSEAC_CHECK(teacher_width_mult >= 1, "posenet.teacher_width_mult must be >= 1");
        POSEAC_CHECK(softmax_temp > 0.0, "posenet.softmax_temp must be positive");

        const std::pair<const char*, const PoseTrainConfig*> blocks[] = {
            {"teacher_train", &teacher_train},
            {"student_train", &student_train},
            {"finetune_train", &finetune_train}};
        for (const auto& [section, cfg] : blocks) {
            check_train_common(section, cfg->epochs, cfg->batch_size, cfg->lr,
                               cfg->momentum);
            POSEAC_CHECK(cfg->sigma > 0.0, section, ".sigma must be positive");
            POSEAC_CHECK(cfg->loss_scale > 0.0, section, ".loss_scale must be positive");
            POSEAC_CHECK(cfg->frames_per_epoch >= 0, section,
                         ".frames_per_epoch must be >= 0");
        }

        corrector.validate();
        check_train_common("corrector_train", corrector_train.epochs,
                           corrector_train.batch_size, corrector_train.lr,
                           corrector_train.momentum);
        POSEAC_CHECK(corrector_train.quality_factor >= 0.0 &&
                         corrector_train.quality_factor <= 1.0,
                     "corrector_train.quality_factor must be in [0,1]");
        POSEAC_CHECK(corrector_train.frames_per_epoch >= 0,
                     "corrector_train.frames_per_epoch must be >= 0");

        POSEAC_CHECK(gait_net.hidden >= 1 && gait_net.feat >= 1,
                     "gait.hidden and gait.feat must be >= 1");
        check_train_common("gait_train", gait_train.epochs, gait_train.batch_size,
                           gait_train.lr, gait_train.momentum);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    check_keys(j, "<root>",
               {"name", "seed", "out_dir", "arms", "corpus", "degradation", "crop",
                "posenet", "teacher_train", "student_train", "finetune_train",
                "corrector", "corrector_train", "gait", "gait_train"});

    c.name = get_or<std::string>(j, "name", c.name);
    c.seed = get_or<uint64_t>(j, "seed", c.seed);

    if (j.contains("arms")) {
        c.arms.clear();
        for (const auto& a : j.at("arms"))
            c.arms.push_back(arm_from_string(a.get<std::string>()));
    }

    if (j.contains("corpus")) {
        const auto& s = j.at("corpus");
        check_keys(s, "corpus",
                   {"n_identities", "scenarios", "angles", "n_frames", "frame_h",
                    "frame_w"});
        c.corpus.n_identities = get_or(s, "n_identities", c.corpus.n_identities);
        c.corpus.scenarios =
            get_or<std::vector<std::string>>(s, "scenarios", c.corpus.scenarios);
        c.corpus.angles = get_or<std::vector<int>>(s, "angles", c.corpus.angles);
        c.corpus.n_frames = get_or(s, "n_frames", c.corpus.n_frames);
        c.corpus.frame_h = get_or(s, "frame_h", c.corpus.frame_h);
        c.corpus.frame_w = get_or(s, "frame_w", c.corpus.frame_w);
    }

    if (j.contains("degradation")) {
        const auto& s = j.at("degradation");
        check_keys(s, "degradation", {"codec", "quality", "external_command_template"});
        const std::string kind = get_or<std::string>(s, "codec", "builtin_dct");
        if (kind == "builtin_dct")
            c.degradation.codec = codec::CodecKind::builtin_dct;
        else if (kind == "external")
            c.degradation.codec = codec::CodecKind::external;
        else
            throw ConfigError("degradation.codec must be builtin_dct or external");
        c.degradation.quality = get_or(s, "quality", c.degradation.quality);
        c.degradation.external_command_template = get_or<std::string>(
            s, "external_command_template", c.degradation.external_command_template);
    }

    if (j.contains("crop")) {
        const auto& s = j.at("crop");
        check_keys(s, "crop", {"pad_frac_v", "pad_frac_h", "aspect_tolerance"});
        c.crop.pad_frac_v = get_or(s, "pad_frac_v", c.crop.pad_frac_v);
        c.crop.pad_frac_h = get_or(s, "pad_frac_h", c.crop.pad_frac_h);
        c.crop.aspect_tolerance = get_or(s, "aspect_tolerance", c.crop.aspect_tolerance);
    }
    c.crop.out_h = c.corpus.frame_h;
    c.crop.out_w = c.corpus.frame_w;

    if (j.contains("posenet")) {
        const auto& s = j.at("posenet");
        check_keys(s, "posenet", {"student_widths", "teacher_width_mult", "softmax_temp"});
        if (s.contains("student_widths")) {
            const auto& ws = s.at("student_widths");
            if (!ws.is_array() || ws.size() != 4)
                throw ConfigError("posenet.student_widths must be a list of 4 ints");
            for (size_t i = 0; i < 4; ++i) c.student_widths[i] = ws[i].get<int>();
        }
        c.teacher_width_mult = get_or(s, "teacher_width_mult", c.teacher_width_mult);
        c.softmax_temp = get_or(s, "softmax_temp", c.softmax_temp);
    }

    if (j.contains("teacher_train"))
        parse_pose_train(j.at("teacher_train"), "teacher_train", c.teacher_train);
    if (j.contains("student_train"))
        parse_pose_train(j.at("student_train"), "student_train", c.student_train);
    if (j.contains("finetune_train"))
        parse_pose_train(j.at("finetune_train"), "finetune_train", c.finetune_train);

    if (j.contains("corrector")) {
        const auto& s = j.at("corrector");
        check_keys(s, "corrector", {"scales", "quality_factor", "skips"});
        if (s.contains("scales")) {
            const auto& sc = s.at("scales");
            if (!sc.is_array() || sc.size() != 3)
                throw ConfigError("corrector.scales must be an array of 3 widths");
            for (int i = 0; i < 3; ++i) c.corrector.scales[i] = sc.at(i).get<int>();
        }
        c.corrector.quality_factor =
            get_or(s, "quality_factor", c.corrector.quality_factor);
        c.corrector.skips = get_or(s, "skips", c.corrector.skips);
    }
    c.corrector_train.quality_factor = c.corrector.quality_factor;

    if (j.contains("corrector_train")) {
        const auto& s = j.at("corrector_train");
        check_keys(s, "corrector_train",
                   {"epochs", "batch_size", "lr", "momentum", "clip_norm",
                    "frames_per_epoch"});
        c.corrector_train.epochs = get_or(s, "epochs", c.corrector_train.epochs);
        c.corrector_train.batch_size =
            get_or(s, "batch_size", c.corrector_train.batch_size);
        c.corrector_train.lr = get_or(s, "lr", c.corrector_train.lr);
        c.corrector_train.momentum = get_or(s, "momentum", c.corrector_train.momentum);
        c.corrector_train.clip_norm = get_or(s, "clip_norm", c.corrector_train.clip_norm);
        c.corrector_train.frames_per_epoch =
            get_or(s, "frames_per_epoch", c.corrector_train.frames_per_epoch);
    }

    if (j.contains("gait")) {
        const auto& s = j.at("gait");
        check_keys(s, "gait", {"hidden", "feat"});
        c.gait_net.hidden = get_or(s, "hidden", c.gait_net.hidden);
        c.gait_net.feat = get_or(s, "feat", c.gait_net.feat);
    }

    if (j.contains("gait_train")) {
        const auto& s = j.at("gait_train");
        check_keys(s, "gait_train", {"epochs", "batch_size", "lr", "momentum"});
        c.gait_train.epochs = get_or(s, "epochs", c.gait_train.epochs);
        c.gait_train.batch_size = get_or(s, "batch_size", c.gait_train.batch_size);
        c.gait_train.lr = get_or(s, "lr", c.gait_train.lr);
        c.gait_train.momentum = get_or(s, "momentum", c.gait_train.momentum);
    }

    const std::string out = get_or<std::string>(j, "out_dir", "");
    c.out_dir = out.empty() ? std::filesystem::path("runs") / c.name
                            : std::filesystem::path(out);
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.good()) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON (" + path.string() + "): " + e.what());
    }
    return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json arms_j = nlohmann::json::array();
    for (Arm a : arms) arms_j.push_back(to_string(a));
    return {
        {"name", name},
        {"seed", seed},
        {"out_dir", out_dir.generic_string()},
        {"arms", arms_j},
        {"corpus",
         {{"n_identities", corpus.n_identities},
          {"scenarios", corpus.scenarios},
          {"angles", corpus.angles},
          {"n_frames", corpus.n_frames},
          {"frame_h", corpus.frame_h},
          {"frame_w", corpus.frame_w}}},
        {"degradation",
         {{"codec",
           degradation.codec == codec::CodecKind::builtin_dct ? "builtin_dct"
                                                              : "external"},
          {"quality", degradation.quality},
          {"external_command_template", degradation.external_command_template}}},
        {"crop",
         {{"pad_frac_v", crop.pad_frac_v},
          {"pad_frac_h", crop.pad_frac_h},
          {"aspect_tolerance", crop.aspect_tolerance}}},
        {"posenet",
         {{"student_widths", student_widths},
          {"teacher_width_mult", teacher_width_mult},
          {"softmax_temp", softmax_temp}}},
        {"teacher_train", pose_train_json(teacher_train)},
        {"student_train", pose_train_json(student_train)},
        {"finetune_train", pose_train_json(finetune_train)},
        {"corrector",
         {{"scales", {corrector.scales[0], corrector.scales[1], corrector.scales[2]}},
          {"quality_factor", corrector.quality_factor},
          {"skips", corrector.skips}}},
        {"corrector_train",
         {{"epochs", corrector_train.epochs},
          {"batch_size", corrector_train.batch_size},
          {"lr", corrector_train.lr},
          {"momentum", corrector_train.momentum},
          {"clip_norm", corrector_train.clip_norm},
          {"frames_per_epoch", corrector_train.frames_per_epoch}}},
        {"gait", {{"hidden", gait_net.hidden}, {"feat", gait_net.feat}}},
        {"gait_train",
         {{"epochs", gait_train.epochs},
          {"batch_size", gait_train.batch_size},
          {"lr", gait_train.lr},
          {"momentum", gait_train.momentum}}},
    };
}

}  // namespace poseac::pipeline
