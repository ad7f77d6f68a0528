// Built-in block-DCT degradation: quality scale hand values, PSNR hand cases,
// determinism, quality monotonicity, block-boundary artifacts, and the
// external-command configuration guard.

#include <cmath>
#include <vector>

#include <doctest/doctest.h>

#include "poseac/codec/codec.hpp"
#include "poseac/core/rng.hpp"
#include "poseac/synthwalk/synthwalk.hpp"

#include "test_util.hpp"

using namespace poseac;
using namespace poseac::codec;

namespace {

Image noise_image(int h, int w, uint64_t seed) {
    Rng rng(seed);
    Image img(h, w, 3);
    for (auto& v : img.px) v = float(rng.uniform(0.0, 1.0));
    return img;
}

}  // namespace

TEST_CASE("quality_scale_factor: hand values and clamps") {
    CHECK(quality_scale_factor(10) == doctest::Approx(5.0));    // 50/10
    CHECK(quality_scale_factor(25) == doctest::Approx(2.0));    // 50/25
    CHECK(quality_scale_factor(50) == doctest::Approx(1.0));    // (100-50)/50
    CHECK(quality_scale_factor(75) == doctest::Approx(0.5));
    CHECK(quality_scale_factor(99) == doctest::Approx(0.02));   // floored
    CHECK(quality_scale_factor(100) == doctest::Approx(0.02));  // 0 -> floor
    CHECK_THROWS(quality_scale_factor(0));
    CHECK_THROWS(quality_scale_factor(101));
}

TEST_CASE("psnr: hand cases") {
    Image a(8, 8, 3, 0.5f);
    CHECK(psnr(a, a) == doctest::Approx(99.0));  // identical -> capped
    Image b = a;
    for (auto& v : b.px) v = 0.0f;
    // MSE = 0.25 -> 10*log10(1/0.25) = 6.0206 dB.
    CHECK(psnr(a, b) == doctest::Approx(6.0205999).epsilon(1e-6));
    Image c = a;
    c.px[0] += 0.1f;  // single-pixel error, known MSE
    const double mse = 0.1 * 0.1 / double(a.size());
    CHECK(psnr(a, c) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-4));
}

TEST_CASE("degrade_frame: deterministic, bounded, and better at higher quality") {
    const Image img = noise_image(32, 24, 99);
    const Image d1 = degrade_frame(img, 10);
    const Image d2 = degrade_frame(img, 10);
    REQUIRE(d1.same_shape(img));
    CHECK(d1.px == d2.px);

    for (float v : d1.px) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.f);
        CHECK(v <= 1.f);
    }

    // Quality ladder: PSNR must improve monotonically along 10 -> 50 -> 95.
    const double p10 = psnr(img, degrade_frame(img, 10));
    const double p50 = psnr(img, degrade_frame(img, 50));
    const double p95 = psnr(img, degrade_frame(img, 95));
    CHECK(p10 < p50);
    CHECK(p50 < p95);
    // Heavy setting must be visibly lossy, light setting close to transparent.
    CHECK(p10 < 25.0);
    CHECK(p95 > 30.0);
}

TEST_CASE("degrade_frame: non-multiple-of-8 sizes round trip shape") {
    const Image img = noise_image(21, 13, 5);
    const Image d = degrade_frame(img, 10);
    REQUIRE(d.h == 21);
    REQUIRE(d.w == 13);
    REQUIRE(d.c == 3);
    // A flat image compresses losslessly up to rounding regardless of padding.
    Image flat(21, 13, 3, 0.4f);
    const Image df = degrade_frame(flat, 10);
    for (float v : df.px) CHECK(v == doctest::Approx(0.4f).epsilon(0.02));
}

TEST_CASE("degrade_frame: quality 10 produces 8x8 block structure") {
    // Smooth gradient input: blocking shows up as discontinuities across
    // block boundaries that exceed the in-block steps of the original.
    Image img(64, 64, 3);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            for (int ch = 0; ch < 3; ++ch)
                img.at(y, x, ch) = 0.15f + 0.7f * float(x + y) / 126.f;
    const Image d = degrade_frame(img, 10);
    auto mean_jump = [&](bool at_boundary) {
        double sum = 0.0;
        long n = 0;
        for (int y = 0; y < 64; ++y)
            for (int x = 1; x < 64; ++x) {
                if ((x % 8 == 0) != at_boundary) continue;
                sum += std::abs(double(d.at(y, x, 0)) - d.at(y, x - 1, 0));
                ++n;
            }
        return sum / double(n);
    };
    // Jumps across block boundaries dominate the smooth in-block steps.
    CHECK(mean_jump(true) > 2.0 * mean_jump(false));
}

TEST_CASE("degrade_video: temporal path keeps size, is deterministic, degrades every frame") {
    const auto who = synthwalk::derive_identity(3, 1);
    const synthwalk::VideoSample s =
        synthwalk::synthesize_sequence(who, "normal", 90, 5, 64, 48, 44);
    DegradationConfig cfg;
    cfg.quality = 10;
    const synthwalk::VideoSample d1 = degrade_video(s, cfg);
    const synthwalk::VideoSample d2 = degrade_video(s, cfg);
    REQUIRE(d1.frames.size() == s.frames.size());
    CHECK(d1.identity_id == s.identity_id);
    CHECK(d1.keypoints_gt.size() == s.keypoints_gt.size());
    for (size_t f = 0; f < s.frames.size(); ++f) {
        CHECK(d1.frames[f].px == d2.frames[f].px);
        const double p = psnr(s.frames[f], d1.frames[f]);
        CHECK(p < 40.0);  // visibly lossy
        CHECK(p > 8.0);   // but still recognisably the same frame
    }
}

TEST_CASE("DegradationConfig validation: external needs a command template") {
    DegradationConfig ok;
    ok.validate();

    DegradationConfig bad_quality;
    bad_quality.quality = 0;
    CHECK_THROWS(bad_quality.validate());

    DegradationConfig ext;
    ext.codec = CodecKind::external;
    ext.quality = 45;
    ext.external_command_template = "";  // missing
    CHECK_THROWS(ext.validate());
    ext.external_command_template = "transcode {in}";  // no {out}
    CHECK_THROWS(ext.validate());
    ext.external_command_template = "transcode {in} {out}";
    ext.validate();
}
