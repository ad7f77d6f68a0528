#include "poseac/codec/codec.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "poseac/core/check.hpp"

namespace poseac::codec {

namespace {

// Standard JPEG luminance quantization matrix, applied to all channels.
constexpr std::array<std::array<float, 8>, 8> kBaseQuant = {{
    {16, 11, 10, 16, 24, 40, 51, 61},
    {12, 12, 14, 19, 26, 58, 60, 55},
    {14, 13, 16, 24, 40, 57, 69, 56},
    {14, 17, 22, 29, 51, 87, 80, 62},
    {18, 22, 37, 56, 68, 109, 103, 77},
    {24, 35, 55, 64, 81, 104, 113, 92},
    {49, 64, 78, 87, 103, 121, 120, 101},
    {72, 92, 95, 98, 112, 100, 103, 99},
}};

// Orthonormal 8-point DCT-II basis.
struct DctTables {
    float fwd[8][8];  // fwd[u][x]
    DctTables() {
        for (int u = 0; u < 8; ++u) {
            float a = u == 0 ? std::sqrt(1.f / 8.f) : std::sqrt(2.f / 8.f);
            for (int x = 0; x < 8; ++x)
                fwd[u][x] = a * std::cos((2 * x + 1) * u * static_cast<float>(M_PI) / 16.f);
        }
    }
};

const DctTables& dct_tables() {
    static const DctTables t;
    return t;
}

void dct8x8(const float in[8][8], float out[8][8]) {
    const auto& c = dct_tables().fwd;
    float tmp[8][8];
    for (int u = 0; u < 8; ++u)
        for (int x = 0; x < 8; ++x) {
            float s = 0.f;
            for (int k = 0; k < 8; ++k) s += c[u][k] * in[k][x];
            tmp[u][x] = s;
        }
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            float s = 0.f;
            for (int k = 0; k < 8; ++k) s += tmp[u][k] * c[v][k];
            out[u][v] = s;
        }
}

void idct8x8(const float in[8][8], float out[8][8]) {
    const auto& c = dct_tables().fwd;
    float tmp[8][8];
    for (int x = 0; x < 8; ++x)
        for (int v = 0; v < 8; ++v) {
            float s = 0.f;
            for (int k = 0; k < 8; ++k) s += c[k][x] * in[k][v];
            tmp[x][v] = s;
        }
    for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y) {
            float s = 0.f;
            for (int k = 0; k < 8; ++k) s += tmp[x][k] * c[k][y];
            out[x][y] = s;
        }
}

int reflect_index(int i, int n) {
    if (i < n) return i;
    return 2 * n - 2 - i;  // reflect without repeating the edge sample
}

// Quantization round trip of a single channel plane, values on the 0..255
// scale. `center` is subtracted before the transform (128 for intra
// samples, 0 for residuals).
void quantize_plane(std::vector<float>& plane, int h, int w, float scale, float center) {
    const int ph = (h + 7) / 8 * 8;
    const int pw = (w + 7) / 8 * 8;
    std::vector<float> padded;
    float* data = plane.data();
    if (ph != h || pw != w) {
        padded.resize(static_cast<size_t>(ph) * pw);
        for (int y = 0; y < ph; ++y)
            for (int x = 0; x < pw; ++x)
                padded[static_cast<size_t>(y) * pw + x] =
                    plane[static_cast<size_t>(reflect_index(y, h)) * w + reflect_index(x, w)];
        data = padded.data();
    }
    float block[8][8], coef[8][8], rec[8][8];
    for (int by = 0; by < ph; by += 8) {
        for (int bx = 0; bx < pw; bx += 8) {
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    block[y][x] = data[static_cast<size_t>(by + y) * pw + bx + x] - center;
            dct8x8(block, coef);
            for (int u = 0; u < 8; ++u)
                for (int v = 0; v < 8; ++v) {
                    float q = kBaseQuant[u][v] * scale;
                    coef[u][v] = std::round(coef[u][v] / q) * q;
                }
            idct8x8(coef, rec);
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    data[static_cast<size_t>(by + y) * pw + bx + x] = rec[y][x] + center;
        }
    }
    if (data != plane.data()) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                plane[static_cast<size_t>(y) * w + x] = padded[static_cast<size_t>(y) * pw + x];
    }
}

void check_finite(const Image& img) {
    for (float v : img.px) POSEAC_CHECK(std::isfinite(v), "non-finite pixel value");
}

std::vector<float> extract_plane(const Image& img, int ch, float mul) {
    std::vector<float> plane(static_cast<size_t>(img.h) * img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            plane[static_cast<size_t>(y) * img.w + x] = img.at(y, x, ch) * mul;
    return plane;
}

}  // namespace

void DegradationConfig::validate() const {
    if (codec == CodecKind::builtin_dct) {
        POSEAC_CHECK(quality >= 1 && quality <= 100, "builtin quality must be 1..100, got ",
                     quality);
    } else {
        POSEAC_CHECK(quality >= 0 && quality <= 51, "external crf must be 0..51, got ", quality);
        POSEAC_CHECK(!external_command_template.empty(),
                     "external codec requires a command template");
        POSEAC_CHECK(external_command_template.find("{in}") != std::string::npos &&
                         external_command_template.find("{out}") != std::string::npos,
                     "external command template must contain {in} and {out}");
    }
}

float quality_scale_factor(int quality) {
    POSEAC_CHECK(quality >= 1 && quality <= 100, "quality must be 1..100, got ", quality);
    float f = quality < 50 ? 50.f / quality : (100.f - quality) / 50.f;
    return std::max(f, 0.02f);
}

Image degrade_frame(const Image& frame, int quality) {
    const float scale = quality_scale_factor(quality);
    check_finite(frame);
    Image out = frame;
    for (int ch = 0; ch < frame.c; ++ch) {
        auto plane = extract_plane(frame, ch, 255.f);
        quantize_plane(plane, frame.h, frame.w, scale, 128.f);
        for (int y = 0; y < frame.h; ++y)
            for (int x = 0; x < frame.w; ++x)
                out.at(y, x, ch) =
                    std::clamp(plane[static_cast<size_t>(y) * frame.w + x] / 255.f, 0.f, 1.f);
    }
    return out;
}

namespace {

synthwalk::VideoSample degrade_video_builtin(const synthwalk::VideoSample& sample,
                                             const DegradationConfig& cfg) {
    synthwalk::VideoSample out = sample;
    const float scale = quality_scale_factor(cfg.quality);
    for (int i = 0; i < sample.n_frames; ++i) {
        if (i == 0) {
            out.frames[0] = degrade_frame(sample.frames[0], cfg.quality);
            continue;
        }
        const Image& prev = out.frames[i - 1];
        const Image& cur = sample.frames[i];
        check_finite(cur);
        Image rec = cur;
        for (int ch = 0; ch < cur.c; ++ch) {
            std::vector<float> residual(static_cast<size_t>(cur.h) * cur.w);
            for (int y = 0; y < cur.h; ++y)
                for (int x = 0; x < cur.w; ++x)
                    residual[static_cast<size_t>(y) * cur.w + x] =
                        (cur.at(y, x, ch) - prev.at(y, x, ch)) * 255.f;
            quantize_plane(residual, cur.h, cur.w, scale, 0.f);
            for (int y = 0; y < cur.h; ++y)
                for (int x = 0; x < cur.w; ++x)
                    rec.at(y, x, ch) = std::clamp(
                        prev.at(y, x, ch) + residual[static_cast<size_t>(y) * cur.w + x] / 255.f,
                        0.f, 1.f);
        }
        out.frames[i] = std::move(rec);
    }
    return out;
}

synthwalk::VideoSample degrade_video_external(const synthwalk::VideoSample& sample,
                                              const DegradationConfig& cfg) {
    namespace fs = std::filesystem;
    char tmpl[] = "/tmp/poseac-ext-XXXXXX";
    POSEAC_CHECK(mkdtemp(tmpl) != nullptr, "mkdtemp failed");
    fs::path work(tmpl);
    fs::path in_dir = work / "in";
    fs::path out_dir = work / "out";
    fs::create_directories(in_dir);
    fs::create_directories(out_dir);
    char name[32];
    for (int i = 0; i < sample.n_frames; ++i) {
        std::snprintf(name, sizeof(name), "frame_%04d.png", i);
        save_png(sample.frames[i], in_dir / name);
    }

    std::string cmd = cfg.external_command_template;
    auto replace_all = [&](const std::string& from, const std::string& to) {
        size_t pos = 0;
        while ((pos = cmd.find(from, pos)) != std::string::npos) {
            cmd.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    replace_all("{in}", in_dir.string());
    replace_all("{out}", out_dir.string());
    replace_all("{crf}", std::to_string(cfg.quality));

    std::string transcript;
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    POSEAC_CHECK(pipe != nullptr, "popen failed for: ", cmd);
    char buf[512];
    while (fgets(buf, sizeof(buf), pipe)) transcript += buf;
    int status = pclose(pipe);

    auto fail = [&](const std::string& why) {
        fs::remove_all(work);
        throw Error("external codec " + why + "\ncommand: " + cmd + "\noutput:\n" + transcript);
    };
    if (status != 0) fail("exited with status " + std::to_string(status));

    synthwalk::VideoSample out = sample;
    for (int i = 0; i < sample.n_frames; ++i) {
        std::snprintf(name, sizeof(name), "frame_%04d.png", i);
        if (!fs::exists(out_dir / name)) fail("did not produce " + std::string(name));
        out.frames[i] = load_png(out_dir / name);
        POSEAC_CHECK(out.frames[i].same_shape(sample.frames[i]),
                     "external codec changed frame shape");
    }
    fs::remove_all(work);
    return out;
}

}  // namespace

synthwalk::VideoSample degrade_video(const synthwalk::VideoSample& sample,
                                     const DegradationConfig& cfg) {
    cfg.validate();
    POSEAC_CHECK(sample.n_frames >= 1 && !sample.frames.empty(), "empty video sample");
    if (cfg.codec == CodecKind::external) return degrade_video_external(sample, cfg);
    return degrade_video_builtin(sample, cfg);
}

double psnr(const Image& a, const Image& b) {
    POSEAC_CHECK(a.same_shape(b), "psnr: shape mismatch");
    double se = 0.0;
    for (size_t i = 0; i < a.px.size(); ++i) {
        double d = static_cast<double>(a.px[i]) - b.px[i];
        se += d * d;
    }
    double mse = se / static_cast<double>(a.px.size());
    if (mse < 1e-12) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

}  // namespace poseac::codec
