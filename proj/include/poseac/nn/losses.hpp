#pragma once

#include <cmath>
#include <vector>

#include "poseac/core/check.hpp"
#include "poseac/core/pose_types.hpp"
#include "poseac/nn/tensor.hpp"

namespace poseac::nn {

// Sum of squared error over channels/cells, mean over the batch, times
// `scale`. Softmax-normalized maps have tiny per-cell values, so the raw MSE
// gradient is far too small for a useful learning rate; `scale` compensates.
template <class T>
T heatmap_mse(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>& dpred,
              T scale) {
    POSEAC_CHECK(pred.same_shape(target), "heatmap_mse shape mismatch");
    const T k = scale / T(pred.n);
    T loss = 0;
    for (size_t j = 0; j < pred.v.size(); ++j) {
        const T d = pred.v[j] - target.v[j];
        loss += k * d * d;
        dpred.v[j] = T(2) * k * d;
    }
    return loss;
}

// Mean over samples of the summed per-keypoint |dx|+|dy|: the batch-mean of
// the per-frame keypoint L1 objective. Coords/targets shaped (n, K, 2, 1).
template <class T>
T l1_coord_loss(const Tensor<T>& pred, const Tensor<T>& target, Tensor<T>& dcoords) {
    POSEAC_CHECK(pred.same_shape(target), "l1_coord_loss shape mismatch");
    dcoords = Tensor<T>(pred.n, pred.c, pred.h, pred.w);
    T loss = 0;
    const T inv_n = T(1) / T(pred.n);
    for (size_t j = 0; j < pred.v.size(); ++j) {
        const T d = pred.v[j] - target.v[j];
        loss += inv_n * std::abs(d);
        dcoords.v[j] = inv_n * (d > 0 ? T(1) : d < 0 ? T(-1) : T(0));
    }
    return loss;
}

template <class T>
void poses_to_coords(const std::vector<Pose>& poses, Tensor<T>& coords) {
    POSEAC_CHECK(!poses.empty(), "poses_to_coords on empty batch");
    coords = Tensor<T>(static_cast<int>(poses.size()),
                       static_cast<int>(poses[0].size()), 2, 1);
    for (int i = 0; i < coords.n; ++i)
        for (int k = 0; k < coords.c; ++k) {
            coords.at(i, k, 0, 0) = T(poses[i][k].x);
            coords.at(i, k, 1, 0) = T(poses[i][k].y);
        }
}

// Softmax cross entropy over logits shaped (n, classes, 1, 1); mean over batch.
template <class T>
T softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                        Tensor<T>& dlogits) {
    POSEAC_CHECK(logits.h == 1 && logits.w == 1, "logits must be (n,c,1,1)");
    POSEAC_CHECK(static_cast<int>(labels.size()) == logits.n, "label count");
    const int C = logits.c;
    T loss = 0;
    const T inv_n = T(1) / T(logits.n);
    std::vector<T> prob(C);
    for (int i = 0; i < logits.n; ++i) {
        const T* z = logits.sample(i);
        T mx = z[0];
        for (int c = 1; c < C; ++c) mx = std::max(mx, z[c]);
        T sum = 0;
        for (int c = 0; c < C; ++c) sum += (prob[c] = std::exp(z[c] - mx));
        const T inv_sum = T(1) / sum;
        T* dz = dlogits.sample(i);
        for (int c = 0; c < C; ++c) {
            prob[c] *= inv_sum;
            dz[c] = inv_n * (prob[c] - (c == labels[i] ? T(1) : T(0)));
        }
        loss += -inv_n * std::log(std::max(prob[labels[i]], T(1e-30)));
    }
    return loss;
}

}  // namespace poseac::nn
