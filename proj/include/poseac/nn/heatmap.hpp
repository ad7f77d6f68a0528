#pragma once

#include <cmath>
#include <vector>

#include "poseac/core/pose_types.hpp"
#include "poseac/nn/tensor.hpp"

namespace poseac::nn {

// Heatmap cell (ux, uy) covers the stride x stride pixel block starting at
// (ux*stride, uy*stride); its representative pixel coordinate is the block
// center ux*stride + stride/2. All decode/encode helpers share this mapping.

// Expectation of the pixel-center grid under per-channel probability maps.
// `probs` must already be normalized (spatial softmax output). Output coords
// are shaped (n, c, 2, 1) with x at (i,ch,0,0) and y at (i,ch,1,0).
template <class T>
void soft_argmax(const Tensor<T>& probs, T stride, Tensor<T>& coords) {
    coords = Tensor<T>(probs.n, probs.c, 2, 1);
    const T half = stride / T(2);
    for (int i = 0; i < probs.n; ++i)
        for (int ch = 0; ch < probs.c; ++ch) {
            const T* p = probs.sample(i) + static_cast<size_t>(ch) * probs.h * probs.w;
            T ex = 0, ey = 0;
            for (int y = 0; y < probs.h; ++y)
                for (int x = 0; x < probs.w; ++x) {
                    const T w = p[y * probs.w + x];
                    ex += w * (T(x) * stride + half);
                    ey += w * (T(y) * stride + half);
                }
            coords.at(i, ch, 0, 0) = ex;
            coords.at(i, ch, 1, 0) = ey;
        }
}

// d loss / d probs given d loss / d coords; accumulates into dprobs.
template <class T>
void soft_argmax_backward(const Tensor<T>& dcoords, T stride, Tensor<T>& dprobs) {
    const T half = stride / T(2);
    for (int i = 0; i < dprobs.n; ++i)
        for (int ch = 0; ch < dprobs.c; ++ch) {
            T* dp = dprobs.sample(i) + static_cast<size_t>(ch) * dprobs.h * dprobs.w;
            const T dx = dcoords.at(i, ch, 0, 0);
            const T dy = dcoords.at(i, ch, 1, 0);
            for (int y = 0; y < dprobs.h; ++y)
                for (int x = 0; x < dprobs.w; ++x)
                    dp[y * dprobs.w + x] += dx * (T(x) * stride + half) +
                                            dy * (T(y) * stride + half);
        }
}

template <class T>
std::vector<Pose> coords_to_poses(const Tensor<T>& coords) {
    std::vector<Pose> out(coords.n, Pose(coords.c));
    for (int i = 0; i < coords.n; ++i)
        for (int ch = 0; ch < coords.c; ++ch)
            out[i][ch] = {float(coords.at(i, ch, 0, 0)), float(coords.at(i, ch, 1, 0))};
    return out;
}

template <class T>
std::vector<Pose> soft_argmax_poses(const Tensor<T>& probs, T stride) {
    Tensor<T> coords;
    soft_argmax(probs, stride, coords);
    return coords_to_poses(coords);
}

// Peak cell center (first occurrence wins ties). Non-differentiable reference
// decode used to sanity-check the soft decode.
template <class T>
std::vector<Pose> hard_argmax_poses(const Tensor<T>& probs, T stride) {
    std::vector<Pose> out(probs.n, Pose(probs.c));
    const float half = float(stride) / 2.f;
    for (int i = 0; i < probs.n; ++i)
        for (int ch = 0; ch < probs.c; ++ch) {
            const T* p = probs.sample(i) + static_cast<size_t>(ch) * probs.h * probs.w;
            int best = 0;
            for (int j = 1; j < probs.h * probs.w; ++j)
                if (p[j] > p[best]) best = j;
            out[i][ch] = {float(best % probs.w) * float(stride) + half,
                          float(best / probs.w) * float(stride) + half};
        }
    return out;
}

// Normalized Gaussian target centered on the keypoint, sigma in heatmap cells.
// Written into channel `ch` of sample `i`.
template <class T>
void render_gaussian_target(Tensor<T>& maps, int i, int ch, Vec2 kp_px, T stride,
                            T sigma) {
    T* p = maps.sample(i) + static_cast<size_t>(ch) * maps.h * maps.w;
    const double ux = (kp_px.x - double(stride) / 2.0) / double(stride);
    const double uy = (kp_px.y - double(stride) / 2.0) / double(stride);
    const double inv2s2 = 1.0 / (2.0 * double(sigma) * double(sigma));
    double sum = 0;
    for (int y = 0; y < maps.h; ++y)
        for (int x = 0; x < maps.w; ++x) {
            const double d2 = (x - ux) * (x - ux) + (y - uy) * (y - uy);
            const double v = std::exp(-d2 * inv2s2);
            p[y * maps.w + x] = T(v);
            sum += v;
        }
    if (sum <= 0) {  // center absurdly far off-grid: fall back to uniform
        const T u = T(1) / T(maps.h * maps.w);
        for (int j = 0; j < maps.h * maps.w; ++j) p[j] = u;
        return;
    }
    const T inv = T(1.0 / sum);
    for (int j = 0; j < maps.h * maps.w; ++j) p[j] *= inv;
}

}  // namespace poseac::nn
