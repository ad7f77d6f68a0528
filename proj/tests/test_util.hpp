#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "poseac/core/rng.hpp"
#include "poseac/nn/tensor.hpp"

namespace poseac::testutil {

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1e-12, std::abs(a), std::abs(b)});
}

// Central finite difference of eval() with respect to one scalar slot.
inline double central_diff(double& slot, double eps, const std::function<double()>& eval) {
    const double save = slot;
    slot = save + eps;
    const double jp = eval();
    slot = save - eps;
    const double jm = eval();
    slot = save;
    return (jp - jm) / (2.0 * eps);
}

template <class T>
void fill_uniform(nn::Tensor<T>& t, Rng& rng, double lo, double hi) {
    for (auto& v : t.v) v = T(rng.uniform(lo, hi));
}

}  // namespace poseac::testutil
