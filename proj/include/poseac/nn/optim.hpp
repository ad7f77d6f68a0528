#pragma once

#include <cmath>
#include <vector>

#include "poseac/nn/tensor.hpp"

namespace poseac::nn {

// Global-norm gradient clip: rescales every gradient so their joint L2 norm
// is at most max_norm. Returns the pre-clip norm. No-op when max_norm <= 0.
// The heatmap/softmax objectives have a huge gradient dynamic range between
// the flat early phase and the sharpened late phase; without a clip the
// momentum buffer overshoots the logits into softmax saturation, where the
// gradient is exactly zero and training freezes.
template <class T>
double clip_grad_norm(std::vector<ParamRef<T>>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params)
        for (T g : p.grad->v) sq += double(g) * double(g);
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const T k = T(max_norm / norm);
        for (auto& p : params)
            for (T& g : p.grad->v) g *= k;
    }
    return norm;
}

template <class T>
class SgdMomentum {
public:
    SgdMomentum(std::vector<ParamRef<T>> params, T lr, T momentum)
        : params_(std::move(params)), lr_(lr), momentum_(momentum) {
        velocity_.reserve(params_.size());
        for (const auto& p : params_)
            velocity_.emplace_back(p.value->n, p.value->c, p.value->h, p.value->w);
    }

    void zero_grad() {
        for (auto& p : params_) p.grad->zero();
    }

    void step() {
        for (size_t i = 0; i < params_.size(); ++i) {
            auto& val = params_[i].value->v;
            auto& grad = params_[i].grad->v;
            auto& vel = velocity_[i].v;
            for (size_t j = 0; j < val.size(); ++j) {
                vel[j] = momentum_ * vel[j] - lr_ * grad[j];
                val[j] += vel[j];
            }
        }
    }

private:
    std::vector<ParamRef<T>> params_;
    T lr_;
    T momentum_;
    std::vector<Tensor<T>> velocity_;
};

}  // namespace poseac::nn
