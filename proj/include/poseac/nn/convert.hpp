#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "poseac/core/check.hpp"
#include "poseac/core/image.hpp"
#include "poseac/core/pose_types.hpp"
#include "poseac/nn/tensor.hpp"

namespace poseac::nn {

// HWC float image -> CHW sample slot of an NCHW tensor.
template <class T>
void image_to_sample(const Image& img, Tensor<T>& x, int i) {
    POSEAC_CHECK(img.h == x.h && img.w == x.w && img.c == x.c,
                 "image_to_sample shape mismatch");
    T* s = x.sample(i);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int y = 0; y < img.h; ++y)
        for (int xx = 0; xx < img.w; ++xx)
            for (int c = 0; c < img.c; ++c)
                s[c * plane + static_cast<size_t>(y) * x.w + xx] =
                    T(img.px[(static_cast<size_t>(y) * img.w + xx) * img.c + c]);
}

template <class T>
Image sample_to_image(const Tensor<T>& x, int i) {
    Image img(x.h, x.w, x.c);
    const T* s = x.sample(i);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int y = 0; y < x.h; ++y)
        for (int xx = 0; xx < x.w; ++xx)
            for (int c = 0; c < x.c; ++c)
                img.px[(static_cast<size_t>(y) * x.w + xx) * x.c + c] =
                    float(s[c * plane + static_cast<size_t>(y) * x.w + xx]);
    return img;
}

// Frames held as uint8 HWC to keep large training splits in RAM; values were
// PNG bytes, so byte/255 reproduces the decoded float image exactly.
struct FrameStore {
    int h = 0, w = 0, c = 0;
    std::vector<std::vector<uint8_t>> frames;
    std::vector<Pose> poses;  // per-frame target keypoints, frame pixels

    size_t size() const { return frames.size(); }

    void add(const Image& img, const Pose& pose) {
        if (frames.empty()) {
            h = img.h;
            w = img.w;
            c = img.c;
        }
        POSEAC_CHECK(img.h == h && img.w == w && img.c == c, "FrameStore shape mismatch");
        std::vector<uint8_t> bytes(img.px.size());
        for (size_t j = 0; j < bytes.size(); ++j)
            bytes[j] = static_cast<uint8_t>(
                std::lround(std::min(std::max(img.px[j], 0.0f), 1.0f) * 255.0f));
        frames.push_back(std::move(bytes));
        poses.push_back(pose);
    }

    template <class T>
    void fill_sample(Tensor<T>& x, int slot, size_t frame_idx) const {
        const auto& bytes = frames[frame_idx];
        T* s = x.sample(slot);
        const size_t plane = static_cast<size_t>(h) * w;
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx)
                for (int ch = 0; ch < c; ++ch)
                    s[ch * plane + static_cast<size_t>(y) * w + xx] =
                        T(bytes[(static_cast<size_t>(y) * w + xx) * c + ch]) / T(255);
    }

    Image image(size_t frame_idx) const {
        Image img(h, w, c);
        const auto& bytes = frames[frame_idx];
        for (size_t j = 0; j < bytes.size(); ++j) img.px[j] = bytes[j] / 255.0f;
        return img;
    }
};

}  // namespace poseac::nn
