// Dataset construction geometry: crop box math, the crop/uncrop inverse
// transform, aspect filtering, and keypoint rescaling.

#include <cmath>
#include <vector>

#include <doctest/doctest.h>

#include "poseac/core/rng.hpp"
#include "poseac/databuild/databuild.hpp"

#include "test_util.hpp"

using namespace poseac;
using namespace poseac::databuild;

namespace {

Pose random_pose_in(Rng& rng, int k, double w, double h) {
    Pose p(k);
    for (auto& v : p) {
        v.x = float(rng.uniform(0.05 * w, 0.95 * w));
        v.y = float(rng.uniform(0.05 * h, 0.95 * h));
    }
    return p;
}

}  // namespace

TEST_CASE("compute_crop_box: hand case, pads applied and clipped") {
    // Keypoints spanning x in [20,40], y in [30,80] inside a 128x96 frame.
    Pose kp = {{20.f, 30.f}, {40.f, 80.f}};
    const CropBox box = compute_crop_box(128, 96, kp, 0.55, 0.37);
    // Half-pads: 0.37*96 = 35.52 horizontally, 0.55*128 = 70.4 vertically.
    // x: [30 - (10+35.52), 30 + 45.52] -> clip to [0, 75.52] -> snap [0, 76).
    // y: [55 - (25+70.4), 55 + 95.4] -> clip to [0, 128).
    CHECK(box.x0 == 0);
    CHECK(box.y0 == 0);
    CHECK(box.x0 + box.w >= 75);
    CHECK(box.x0 + box.w <= 77);
    CHECK(box.y0 + box.h == 128);
    // Box always contains the keypoint extent.
    CHECK(box.x0 <= 20);
    CHECK(double(box.x0 + box.w) >= 40.0);
    CHECK(box.y0 <= 30);
    CHECK(double(box.y0 + box.h) >= 80.0);
}

TEST_CASE("crop_person: keypoints map by pure translation; inverse recovers originals") {
    Rng rng(66);
    for (int trial = 0; trial < 100; ++trial) {
        const int fh = rng.uniform_int(40, 160), fw = rng.uniform_int(40, 160);
        Image frame(fh, fw, 3);
        for (auto& v : frame.px) v = float(rng.uniform(0.0, 1.0));
        const Pose kp = random_pose_in(rng, 17, fw, fh);
        const double pv = rng.uniform(0.0, 0.6), ph = rng.uniform(0.0, 0.6);
        const CropResult r = crop_person(frame, kp, pv, ph);

        REQUIRE(r.frame.h == r.box.h);
        REQUIRE(r.frame.w == r.box.w);
        CHECK(r.box.x0 >= 0);
        CHECK(r.box.y0 >= 0);
        CHECK(r.box.x0 + r.box.w <= fw);
        CHECK(r.box.y0 + r.box.h <= fh);

        for (int k = 0; k < 17; ++k) {
            // Inverse transform: add the box origin back.
            CHECK(double(r.keypoints[size_t(k)].x) + r.box.x0 ==
                  doctest::Approx(double(kp[size_t(k)].x)).epsilon(1e-6));
            CHECK(double(r.keypoints[size_t(k)].y) + r.box.y0 ==
                  doctest::Approx(double(kp[size_t(k)].y)).epsilon(1e-6));
        }
        // Pixels are a verbatim rectangle copy.
        const int cx = rng.uniform_int(0, r.box.w - 1), cy = rng.uniform_int(0, r.box.h - 1);
        for (int ch = 0; ch < 3; ++ch)
            CHECK(r.frame.at(cy, cx, ch) == frame.at(cy + r.box.y0, cx + r.box.x0, ch));
    }
}

TEST_CASE("aspect_filter: hand cases and the disabled escape hatch") {
    CropBox box;
    box.w = 96;
    box.h = 128;
    const double target = 96.0 / 128.0;
    CHECK(aspect_filter(box, target, 0.15));
    CHECK(aspect_filter(box, target, 0.0));  // exact match passes at zero tolerance

    CropBox wide = box;
    wide.w = 120;  // ratio 0.9375, off by 25%
    CHECK_FALSE(aspect_filter(wide, target, 0.15));
    CHECK(aspect_filter(wide, target, 0.30));
    CHECK(aspect_filter(wide, target, -1.0));  // negative tolerance disables the filter

    CropBox tall = box;
    tall.h = 160;  // ratio 0.6, off by 20%
    CHECK_FALSE(aspect_filter(tall, target, 0.15));
    CHECK(aspect_filter(tall, target, 0.25));
}

TEST_CASE("rescale_keypoints: pixel-center alignment and round trip") {
    // Pixel centers must map to pixel centers: the corner pixel center of the
    // source grid lands on the corner pixel center of the target grid.
    Pose corners = {{0.5f, 0.5f}, {95.5f, 127.5f}};
    const Pose out = rescale_keypoints(corners, 128, 96, 64, 48);
    CHECK(out[0].x == doctest::Approx(0.25).epsilon(1e-5));
    CHECK(out[0].y == doctest::Approx(0.25).epsilon(1e-5));
    CHECK(out[1].x == doctest::Approx(47.75).epsilon(1e-5));
    CHECK(out[1].y == doctest::Approx(127.75 * 64.0 / 128.0).epsilon(1e-4));

    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const int fh = rng.uniform_int(16, 200), fw = rng.uniform_int(16, 200);
        const int th = rng.uniform_int(16, 200), tw = rng.uniform_int(16, 200);
        const Pose kp = random_pose_in(rng, 17, fw, fh);
        const Pose there = rescale_keypoints(kp, fh, fw, th, tw);
        const Pose back = rescale_keypoints(there, th, tw, fh, fw);
        for (int k = 0; k < 17; ++k) {
            CHECK(back[size_t(k)].x == doctest::Approx(kp[size_t(k)].x).epsilon(1e-4));
            CHECK(back[size_t(k)].y == doctest::Approx(kp[size_t(k)].y).epsilon(1e-4));
        }
    }
}

TEST_CASE("CropConfig: json round trip") {
    CropConfig c;
    c.pad_frac_v = 0.4;
    c.pad_frac_h = 0.2;
    c.aspect_tolerance = -1.0;
    c.out_h = 64;
    c.out_w = 48;
    const CropConfig back = CropConfig::from_json(c.to_json());
    CHECK(back.pad_frac_v == c.pad_frac_v);
    CHECK(back.pad_frac_h == c.pad_frac_h);
    CHECK(back.aspect_tolerance == c.aspect_tolerance);
    CHECK(back.out_h == c.out_h);
    CHECK(back.out_w == c.out_w);
}
