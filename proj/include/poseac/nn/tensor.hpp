#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "poseac/core/check.hpp"

namespace poseac::nn {

// Dense NCHW tensor. Kept deliberately simple: shape plus flat storage;
// all layer math happens through Eigen maps over this buffer.
template <class T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(static_cast<size_t>(n_) * c_ * h_ * w_, T(0)) {}

    static Tensor vec(int len) { return Tensor(1, len, 1, 1); }

    size_t size() const { return v.size(); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    size_t sample_stride() const { return static_cast<size_t>(c) * h * w; }
    T* sample(int i) { return v.data() + sample_stride() * i; }
    const T* sample(int i) const { return v.data() + sample_stride() * i; }

    T& at(int in_, int ic, int iy, int ix) {
        return v[((static_cast<size_t>(in_) * c + ic) * h + iy) * w + ix];
    }
    T at(int in_, int ic, int iy, int ix) const {
        return v[((static_cast<size_t>(in_) * c + ic) * h + iy) * w + ix];
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    void zero() { std::fill(v.begin(), v.end(), T(0)); }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out(n, c, h, w);
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// A named view of one parameter tensor and its gradient buffer.
template <class T>
struct ParamRef {
    std::string name;
    Tensor<T>* value = nullptr;
    Tensor<T>* grad = nullptr;
};

}  // namespace poseac::nn
