#include "poseac/synthwalk/synthwalk.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "poseac/core/check.hpp"
#include "poseac/core/rng.hpp"

namespace poseac::synthwalk {

namespace {

constexpr float kCanonicalH = 128.f;

// limb_lengths index names
enum : int { L_UARM = 0, L_FARM, L_THIGH, L_SHANK, L_SHOULDER, L_HIP, L_NECK, L_HEAD };

std::array<float, 3> hsv_to_rgb(float h, float s, float v) {
    float r = std::fabs(h * 6.f - 3.f) - 1.f;
    float g = 2.f - std::fabs(h * 6.f - 2.f);
    float b = 2.f - std::fabs(h * 6.f - 4.f);
    auto mixc = [&](float x) { return v * (1.f + s * (std::clamp(x, 0.f, 1.f) - 1.f)); };
    return {mixc(r), mixc(g), mixc(b)};
}

struct ScenarioStyle {
    float arm_swing_left = 1.f;
    float arm_swing_right = 1.f;
    float leg_swing = 1.f;
    float lean = 0.f;
    float torso_width = 2.2f;
    float upper_leg_width = 1.5f;
    float limb_width = 1.4f;
    bool bag = false;
};

ScenarioStyle scenario_style(const std::string& scenario) {
    if (scenario == "normal") return {};
    if (scenario == "bag") {
        ScenarioStyle s;
        s.arm_swing_left = 0.15f;
        s.lean = 0.05f;
        s.bag = true;
        return s;
    }
    if (scenario == "coat") {
        ScenarioStyle s;
        s.arm_swing_left = 0.55f;
        s.arm_swing_right = 0.55f;
        s.leg_swing = 0.8f;
        s.torso_width = 3.6f;
        s.upper_leg_width = 2.6f;
        return s;
    }
    throw Error("unknown scenario: " + scenario);
}

// View realization: horizontal mirroring for angles past 90 plus swing
// amplitude scaling (frontal views show less lateral limb motion).
struct ViewParams {
    float dir;      // walking direction along +x
    float amp_mod;  // limb swing amplitude factor
};

ViewParams view_params(int angle_deg) {
    const auto& allowed = known_angles();
    POSEAC_CHECK(std::find(allowed.begin(), allowed.end(), angle_deg) != allowed.end(),
                 "angle ", angle_deg, " not in configured set");
    float rad = static_cast<float>(angle_deg) * static_cast<float>(M_PI) / 180.f;
    ViewParams v;
    v.dir = angle_deg <= 90 ? 1.f : -1.f;
    v.amp_mod = 0.25f + 0.75f * std::fabs(std::sin(rad));
    if (angle_deg == 0) v.amp_mod = 0.25f;
    return v;
}

// Joint positions of the walker at frame t. span_px is the total horizontal
// hip travel over the sequence (signed).
Pose walker_pose(const IdentityParams& p, const ScenarioStyle& style, const ViewParams& view,
                 int t, int n_frames, int frame_h, int frame_w, float span_px, float scale) {
    const float uarm = p.limb_lengths[L_UARM] * scale;
    const float farm = p.limb_lengths[L_FARM] * scale;
    const float thigh = p.limb_lengths[L_THIGH] * scale;
    const float shank = p.limb_lengths[L_SHANK] * scale;
    const float sh_half = p.limb_lengths[L_SHOULDER] * scale;
    const float hip_half = p.limb_lengths[L_HIP] * scale;
    const float neck = p.limb_lengths[L_NECK] * scale;
    const float head_r = p.limb_lengths[L_HEAD] * scale;
    const float torso = p.torso_length * scale;

    const float phi = 2.f * static_cast<float>(M_PI) * p.gait_frequency * t + p.gait_phase;
    const float progress = n_frames > 1 ? static_cast<float>(t) / (n_frames - 1) : 0.5f;

    const float hip_mid_x = frame_w * 0.5f - span_px * 0.5f + span_px * progress;
    // Double-frequency bob: two steps per gait cycle.
    const float hip_mid_y = frame_h * 0.52f + 0.05f * torso * std::sin(2.f * phi);

    const float dir = view.dir;
    const float sh_mid_x = hip_mid_x + dir * style.lean * torso;
    const float sh_mid_y = hip_mid_y - torso;

    const float leg_swing = 0.55f * view.amp_mod * style.leg_swing;
    const float arm_swing = 0.45f * view.amp_mod;

    Pose kp(17);
    auto set = [&](int j, float x, float y) { kp[j] = {x, y}; };

    // Legs. Left leg leads at phase phi, right leg is half a cycle behind.
    auto leg = [&](int hip_j, int knee_j, int ankle_j, float side, float phase) {
        float hx = hip_mid_x + side * hip_half;
        float hy = hip_mid_y;
        float th = leg_swing * std::sin(phase);
        // Knee flexion peaks during the swing-through.
        float bend = 0.45f * leg_swing * (1.f + std::sin(phase - 1.2f));
        float kx = hx + dir * thigh * std::sin(th);
        float ky = hy + thigh * std::cos(th);
        float tl = th - bend;
        float ax = kx + dir * shank * std::sin(tl);
        float ay = ky + shank * std::cos(tl);
        set(hip_j, hx, hy);
        set(knee_j, kx, ky);
        set(ankle_j, ax, ay);
    };
    leg(joint::left_hip, joint::left_knee, joint::left_ankle, -1.f, phi);
    leg(joint::right_hip, joint::right_knee, joint::right_ankle, 1.f,
        phi + static_cast<float>(M_PI));

    // Arms swing opposite to the same-side leg.
    auto arm = [&](int sh_j, int el_j, int wr_j, float side, float phase, float swing_mult) {
        float sx = sh_mid_x + side * sh_half;
        float sy = sh_mid_y;
        float th = arm_swing * swing_mult * std::sin(phase);
        float ex = sx + dir * uarm * std::sin(th);
        float ey = sy + uarm * std::cos(th);
        // Slight constant elbow flexion.
        float tl = th + 0.35f;
        float wx = ex + dir * farm * std::sin(tl);
        float wy = ey + farm * std::cos(tl);
        set(sh_j, sx, sy);
        set(el_j, ex, ey);
        set(wr_j, wx, wy);
    };
    arm(joint::left_shoulder, joint::left_elbow, joint::left_wrist, -1.f,
        phi + static_cast<float>(M_PI), style.arm_swing_left);
    arm(joint::right_shoulder, joint::right_elbow, joint::right_wrist, 1.f, phi,
        style.arm_swing_right);

    // Head block sits above the shoulder midpoint.
    const float head_cx = sh_mid_x + dir * 0.1f * head_r;
    const float head_cy = sh_mid_y - neck - head_r;
    set(joint::nose, head_cx + dir * 0.45f * head_r, head_cy + 0.15f * head_r);
    set(joint::left_eye, head_cx + dir * 0.2f * head_r - 0.28f * head_r, head_cy - 0.3f * head_r);
    set(joint::right_eye, head_cx + dir * 0.2f * head_r + 0.28f * head_r, head_cy - 0.3f * head_r);
    set(joint::left_ear, head_cx - 0.75f * head_r, head_cy - 0.05f * head_r);
    set(joint::right_ear, head_cx + 0.75f * head_r, head_cy - 0.05f * head_r);
    return kp;
}

bool pose_in_bounds(const Pose& kp, int frame_h, int frame_w, float margin) {
    for (const auto& pt : kp) {
        if (pt.x < margin || pt.x > frame_w - 1 - margin) return false;
        if (pt.y < margin || pt.y > frame_h - 1 - margin) return false;
    }
    return true;
}

}  // namespace

IdentityParams derive_identity(uint64_t seed, int identity_id) {
    POSEAC_CHECK(identity_id >= 0, "identity_id must be >= 0");
    Rng rng(derive_seed(seed, "identity", static_cast<uint64_t>(identity_id)));
    IdentityParams p;
    p.identity_id = identity_id;
    p.limb_lengths[L_UARM] = static_cast<float>(rng.uniform(12.0, 16.0));
    p.limb_lengths[L_FARM] = static_cast<float>(rng.uniform(11.0, 15.0));
    p.limb_lengths[L_THIGH] = static_cast<float>(rng.uniform(18.0, 24.0));
    p.limb_lengths[L_SHANK] = static_cast<float>(rng.uniform(18.0, 24.0));
    p.limb_lengths[L_SHOULDER] = static_cast<float>(rng.uniform(7.0, 10.0));
    p.limb_lengths[L_HIP] = static_cast<float>(rng.uniform(4.5, 7.0));
    p.limb_lengths[L_NECK] = static_cast<float>(rng.uniform(3.5, 6.0));
    p.limb_lengths[L_HEAD] = static_cast<float>(rng.uniform(4.5, 6.5));
    p.torso_length = static_cast<float>(rng.uniform(26.0, 34.0));
    p.gait_frequency = static_cast<float>(rng.uniform(0.05, 0.11));
    p.gait_phase = static_cast<float>(rng.uniform(0.0, 2.0 * M_PI));
    p.body_hue = hsv_to_rgb(static_cast<float>(rng.uniform(0.0, 1.0)),
                            static_cast<float>(rng.uniform(0.4, 0.8)),
                            static_cast<float>(rng.uniform(0.55, 0.95)));
    return p;
}

Image make_background(int h, int w, uint64_t seed) {
    Rng rng(seed);
    Image bg(h, w, 3);
    // Three octaves of bilinearly interpolated value noise.
    struct Octave {
        int cell;
        float weight;
    };
    const Octave octaves[] = {{24, 0.5f}, {12, 0.3f}, {6, 0.2f}};
    std::vector<float> lum(static_cast<size_t>(h) * w, 0.f);
    for (const auto& oct : octaves) {
        int gh = h / oct.cell + 2, gw = w / oct.cell + 2;
        std::vector<float> grid(static_cast<size_t>(gh) * gw);
        for (auto& g : grid) g = static_cast<float>(rng.uniform());
        for (int y = 0; y < h; ++y) {
            float fy = static_cast<float>(y) / oct.cell;
            int y0 = static_cast<int>(fy);
            float ty = fy - y0;
            ty = ty * ty * (3.f - 2.f * ty);
            for (int x = 0; x < w; ++x) {
                float fx = static_cast<float>(x) / oct.cell;
                int x0 = static_cast<int>(fx);
                float tx = fx - x0;
                tx = tx * tx * (3.f - 2.f * tx);
                float v00 = grid[static_cast<size_t>(y0) * gw + x0];
                float v01 = grid[static_cast<size_t>(y0) * gw + x0 + 1];
                float v10 = grid[static_cast<size_t>(y0 + 1) * gw + x0];
                float v11 = grid[static_cast<size_t>(y0 + 1) * gw + x0 + 1];
                float v = (v00 * (1 - tx) + v01 * tx) * (1 - ty) + (v10 * (1 - tx) + v11 * tx) * ty;
                lum[static_cast<size_t>(y) * w + x] += oct.weight * v;
            }
        }
    }
    // Mild per-channel cast so the texture is not pure gray.
    float cast[3] = {static_cast<float>(rng.uniform(-0.04, 0.04)),
                     static_cast<float>(rng.uniform(-0.04, 0.04)),
                     static_cast<float>(rng.uniform(-0.04, 0.04))};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float v = 0.35f + 0.4f * lum[static_cast<size_t>(y) * w + x];
            for (int ch = 0; ch < 3; ++ch)
                bg.at(y, x, ch) = std::clamp(v + cast[ch], 0.f, 1.f);
        }
    return bg;
}

Image render_frame(const IdentityParams& params, const std::string& scenario, const Pose& kp,
                   const Image& background, uint64_t noise_seed, float scale) {
    POSEAC_CHECK(kp.size() == 17, "render_frame expects 17 keypoints");
    const ScenarioStyle style = scenario_style(scenario);
    Image img = background;

    auto mid = [&](int a, int b) {
        return Vec2{(kp[a].x + kp[b].x) * 0.5f, (kp[a].y + kp[b].y) * 0.5f};
    };
    const Vec2 hip_mid = mid(joint::left_hip, joint::right_hip);
    const Vec2 sh_mid = mid(joint::left_shoulder, joint::right_shoulder);

    // Left and right limbs get distinct shades of the identity hue: the
    // schematic figures carry no other left/right appearance cue, and a local
    // detector cannot tell the sides of a left/right-symmetric figure apart.
    // Right-side limbs rotate the RGB channels instead of darkening: the
    // identity hue is saturated, so a rotation moves far in color space while
    // keeping the same brightness contrast against the mid-gray background
    // (a darkened shade can vanish into it for dark identities).
    const auto& hue = params.body_hue;
    float torso_col[3] = {hue[0], hue[1], hue[2]};
    float arm_l_col[3] = {hue[0] * 0.92f, hue[1] * 0.92f, hue[2] * 0.92f};
    float arm_r_col[3] = {hue[1], hue[2], hue[0]};
    float leg_l_col[3] = {std::min(1.f, hue[0] * 1.08f), std::min(1.f, hue[1] * 1.08f),
                          std::min(1.f, hue[2] * 1.08f)};
    float leg_r_col[3] = {hue[2] * 0.85f, hue[0] * 0.85f, hue[1] * 0.85f};
    float head_col[3] = {std::min(1.f, hue[0] * 1.15f), std::min(1.f, hue[1] * 1.15f),
                         std::min(1.f, hue[2] * 1.15f)};

    auto line = [&](Vec2 a, Vec2 b, float hw, const float col[3]) {
        draw_line_aa(img, a.x, a.y, b.x, b.y, hw, col);
    };

    // Torso block: spine plus shoulder and hip bars.
    line(hip_mid, sh_mid, style.torso_width, torso_col);
    line(kp[joint::left_shoulder], kp[joint::right_shoulder], style.limb_width, torso_col);
    line(kp[joint::left_hip], kp[joint::right_hip], style.limb_width, torso_col);

    // Legs.
    line(kp[joint::left_hip], kp[joint::left_knee], style.upper_leg_width, leg_l_col);
    line(kp[joint::left_knee], kp[joint::left_ankle], style.limb_width, leg_l_col);
    line(kp[joint::right_hip], kp[joint::right_knee], style.upper_leg_width, leg_r_col);
    line(kp[joint::right_knee], kp[joint::right_ankle], style.limb_width, leg_r_col);

    // Arms.
    line(kp[joint::left_shoulder], kp[joint::left_elbow], style.limb_width, arm_l_col);
    line(kp[joint::left_elbow], kp[joint::left_wrist], style.limb_width, arm_l_col);
    line(kp[joint::right_shoulder], kp[joint::right_elbow], style.limb_width, arm_r_col);
    line(kp[joint::right_elbow], kp[joint::right_wrist], style.limb_width, arm_r_col);

    // Head disc centered between the ears, with eye dots for orientation.
    const Vec2 head_c = mid(joint::left_ear, joint::right_ear);
    const float head_r = params.limb_lengths[L_HEAD] * scale;
    draw_disc_aa(img, head_c.x, head_c.y + 0.05f * head_r, head_r, head_col);
    // Face landmarks, again side-coded so each is locally identifiable.
    float eye_l_col[3] = {0.04f, 0.04f, 0.04f};
    float eye_r_col[3] = {0.55f, 0.55f, 0.55f};
    float ear_l_col[3] = {0.18f, 0.1f, 0.06f};
    float ear_r_col[3] = {0.85f, 0.78f, 0.6f};
    float nose_col[3] = {0.6f, 0.2f, 0.15f};
    draw_disc_aa(img, kp[joint::left_ear].x, kp[joint::left_ear].y, 1.1f, ear_l_col);
    draw_disc_aa(img, kp[joint::right_ear].x, kp[joint::right_ear].y, 1.1f, ear_r_col);
    draw_disc_aa(img, kp[joint::nose].x, kp[joint::nose].y, 0.9f, nose_col);
    draw_disc_aa(img, kp[joint::left_eye].x, kp[joint::left_eye].y, 0.7f, eye_l_col);
    draw_disc_aa(img, kp[joint::right_eye].x, kp[joint::right_eye].y, 0.7f, eye_r_col);

    if (style.bag) {
        float bag_col[3] = {0.15f, 0.12f, 0.1f};
        draw_disc_aa(img, kp[joint::left_wrist].x, kp[joint::left_wrist].y + 2.f, 2.4f, bag_col);
    }

    // Per-frame sensor noise.
    Rng noise(noise_seed);
    for (float& v : img.px) v = std::clamp(v + 0.02f * noise.normal_f(), 0.f, 1.f);
    return img;
}

VideoSample synthesize_sequence(const IdentityParams& params, const std::string& scenario,
                                int angle_deg, int n_frames, int frame_h, int frame_w,
                                uint64_t seed) {
    POSEAC_CHECK(n_frames >= 1, "n_frames must be >= 1");
    POSEAC_CHECK(frame_h >= 64 && frame_w >= 48, "frame_size below (64,48)");
    const ScenarioStyle style = scenario_style(scenario);
    const ViewParams view = view_params(angle_deg);
    const float scale = frame_h / kCanonicalH;

    VideoSample out;
    out.identity_id = params.identity_id;
    out.scenario = scenario;
    out.angle_deg = angle_deg;
    out.n_frames = n_frames;

    // Walk span shrinks geometrically until the whole trajectory stays in
    // frame; clamping the trajectory is not an option since it would break
    // the constant-velocity ground truth.
    float span = view.dir * view.amp_mod * 0.32f * frame_w;
    const int max_attempts = 9;
    std::vector<Pose> kps;
    int attempt = 0;
    for (; attempt < max_attempts; ++attempt) {
        if (attempt == max_attempts - 1) span = 0.f;
        kps.clear();
        kps.reserve(n_frames);
        bool ok = true;
        for (int t = 0; t < n_frames && ok; ++t) {
            Pose kp = walker_pose(params, style, view, t, n_frames, frame_h, frame_w, span, scale);
            ok = pose_in_bounds(kp, frame_h, frame_w, 1.5f);
            kps.push_back(std::move(kp));
        }
        if (ok) break;
        span *= 0.7f;
    }
    POSEAC_CHECK(attempt < max_attempts, "figure does not fit frame ", frame_h, "x", frame_w,
                 " for identity ", params.identity_id);
    out.translation_retries = attempt;
    out.keypoints_gt = std::move(kps);

    const Image bg = make_background(frame_h, frame_w, derive_seed(seed, "background"));
    out.frames.reserve(n_frames);
    for (int t = 0; t < n_frames; ++t) {
        out.frames.push_back(render_frame(params, scenario, out.keypoints_gt[t], bg,
                                          derive_seed(seed, "noise", static_cast<uint64_t>(t)),
                                          scale));
    }
    return out;
}

std::map<int, Split> compute_splits(int n_identities, uint64_t seed) {
    POSEAC_CHECK(n_identities >= 10, "need at least 10 identities for non-empty splits");
    std::vector<int> ids(n_identities);
    for (int i = 0; i < n_identities; ++i) ids[i] = i;
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(ids);
    const int n_val = n_identities / 10;
    const int n_test = n_identities / 10;
    const int n_train = n_identities - n_val - n_test;
    std::map<int, Split> split_of;
    for (int i = 0; i < n_identities; ++i) {
        Split s = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);
        split_of[ids[i]] = s;
    }
    return split_of;
}

void for_each_corpus_sample(const CorpusConfig& cfg, uint64_t seed,
                            const std::function<void(VideoSample&&, Split)>& sink) {
    POSEAC_CHECK(!cfg.scenarios.empty(), "empty scenario list");
    POSEAC_CHECK(!cfg.angles.empty(), "empty angle list");
    auto split_of = compute_splits(cfg.n_identities, seed);
    for (int id = 0; id < cfg.n_identities; ++id) {
        IdentityParams params = derive_identity(seed, id);
        for (size_t si = 0; si < cfg.scenarios.size(); ++si) {
            for (size_t ai = 0; ai < cfg.angles.size(); ++ai) {
                uint64_t seq_seed = derive_seed(seed, "sequence",
                                                (static_cast<uint64_t>(id) << 16) |
                                                    (static_cast<uint64_t>(si) << 8) | ai);
                VideoSample s = synthesize_sequence(params, cfg.scenarios[si], cfg.angles[ai],
                                                    cfg.n_frames, cfg.frame_h, cfg.frame_w,
                                                    seq_seed);
                sink(std::move(s), split_of.at(id));
            }
        }
    }
}

Corpus build_corpus(const CorpusConfig& cfg, uint64_t seed) {
    Corpus corpus;
    corpus.split_of = compute_splits(cfg.n_identities, seed);
    for_each_corpus_sample(cfg, seed, [&](VideoSample&& s, Split) {
        corpus.samples.push_back(std::move(s));
    });
    return corpus;
}

std::filesystem::path sample_dir(const std::filesystem::path& root, Split split, int identity_id,
                                 const std::string& scenario, int angle_deg) {
    return root / to_string(split) / std::to_string(identity_id) / scenario /
           std::to_string(angle_deg);
}

void save_sample(const VideoSample& sample, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    char name[32];
    for (int t = 0; t < sample.n_frames; ++t) {
        std::snprintf(name, sizeof(name), "frame_%04d.png", t);
        save_png(sample.frames[t], dir / name);
    }
    std::ofstream out(dir / "keypoints.jsonl");
    POSEAC_CHECK(out.good(), "cannot write keypoints in ", dir.string());
    for (int t = 0; t < sample.n_frames; ++t) {
        nlohmann::json rec;
        rec["frame"] = t;
        auto arr = nlohmann::json::array();
        for (const auto& pt : sample.keypoints_gt[t]) arr.push_back({pt.x, pt.y});
        rec["kp"] = arr;
        out << rec.dump() << "\n";
    }
}

VideoSample load_sample(const std::filesystem::path& dir, int identity_id,
                        const std::string& scenario, int angle_deg) {
    VideoSample s;
    s.identity_id = identity_id;
    s.scenario = scenario;
    s.angle_deg = angle_deg;
    std::ifstream in(dir / "keypoints.jsonl");
    POSEAC_CHECK(in.good(), "missing keypoints.jsonl in ", dir.string());
    std::string line;
    char name[32];
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto rec = nlohmann::json::parse(line);
        Pose kp;
        for (const auto& pt : rec.at("kp"))
            kp.push_back({pt.at(0).get<float>(), pt.at(1).get<float>()});
        s.keypoints_gt.push_back(std::move(kp));
        int t = rec.at("frame").get<int>();
        std::snprintf(name, sizeof(name), "frame_%04d.png", t);
        s.frames.push_back(load_png(dir / name));
    }
    s.n_frames = static_cast<int>(s.frames.size());
    POSEAC_CHECK(s.n_frames >= 1, "empty sample at ", dir.string());
    return s;
}

}  // namespace poseac::synthwalk
