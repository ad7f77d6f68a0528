#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "poseac/core/rng.hpp"
#include "poseac/nn/tensor.hpp"

namespace poseac::nn {

// im2col for one sample: rows = in_c*k*k, cols = out_h*out_w.
template <class T>
void im2col(const T* x, int in_c, int h, int w, int k, int stride, int pad, int out_h, int out_w,
            T* cols) {
    const int patch = k * k;
    for (int ic = 0; ic < in_c; ++ic) {
        const T* xc = x + static_cast<size_t>(ic) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                T* row = cols + (static_cast<size_t>(ic) * patch + ky * k + kx) *
                                    (static_cast<size_t>(out_h) * out_w);
                for (int oy = 0; oy < out_h; ++oy) {
                    int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) {
                        std::fill(row + static_cast<size_t>(oy) * out_w,
                                  row + static_cast<size_t>(oy + 1) * out_w, T(0));
                        continue;
                    }
                    for (int ox = 0; ox < out_w; ++ox) {
                        int ix = ox * stride + kx - pad;
                        row[static_cast<size_t>(oy) * out_w + ox] =
                            (ix >= 0 && ix < w) ? xc[static_cast<size_t>(iy) * w + ix] : T(0);
                    }
                }
            }
        }
    }
}

template <class T>
void col2im_add(const T* cols, int in_c, int h, int w, int k, int stride, int pad, int out_h,
                int out_w, T* x) {
    const int patch = k * k;
    for (int ic = 0; ic < in_c; ++ic) {
        T* xc = x + static_cast<size_t>(ic) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const T* row = cols + (static_cast<size_t>(ic) * patch + ky * k + kx) *
                                          (static_cast<size_t>(out_h) * out_w);
                for (int oy = 0; oy < out_h; ++oy) {
                    int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < out_w; ++ox) {
                        int ix = ox * stride + kx - pad;
                        if (ix >= 0 && ix < w)
                            xc[static_cast<size_t>(iy) * w + ix] +=
                                row[static_cast<size_t>(oy) * out_w + ox];
                    }
                }
            }
        }
    }
}

template <class T>
struct Conv2d {
    int in_c = 0, out_c = 0, k = 3, stride = 1, pad = 1;
    Tensor<T> w;   // (out_c, in_c, k, k)
    Tensor<T> b;   // (1, out_c, 1, 1)
    Tensor<T> gw;
    Tensor<T> gb;

    Conv2d() = default;
    Conv2d(int in_c_, int out_c_, int k_, int stride_, int pad_)
        : in_c(in_c_), out_c(out_c_), k(k_), stride(stride_), pad(pad_),
          w(out_c_, in_c_, k_, k_), b(1, out_c_, 1, 1), gw(out_c_, in_c_, k_, k_),
          gb(1, out_c_, 1, 1) {}

    void init_he(Rng& rng) {
        const double std_dev = std::sqrt(2.0 / (in_c * k * k));
        for (auto& v : w.v) v = static_cast<T>(rng.normal(0.0, std_dev));
        b.zero();
    }
    void init_zero() {
        w.zero();
        b.zero();
    }

    int out_h(int h) const { return (h + 2 * pad - k) / stride + 1; }
    int out_w(int w_) const { return (w_ + 2 * pad - k) / stride + 1; }

    // Samples are independent, so the batch loop is parallel; every thread
    // writes its own y.sample(i), which keeps results bit-identical for any
    // thread count.
    void forward(const Tensor<T>& x, Tensor<T>& y) const {
        POSEAC_CHECK(x.c == in_c, "conv input channels ", x.c, " != ", in_c);
        const int oh = out_h(x.h), ow = out_w(x.w);
        y = Tensor<T>(x.n, out_c, oh, ow);
        const int rows = in_c * k * k;
        const int cols_n = oh * ow;
        ConstMatMap<T> wm(w.data(), out_c, rows);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < x.n; ++i) {
            std::vector<T> cols(static_cast<size_t>(rows) * cols_n);
            im2col(x.sample(i), in_c, x.h, x.w, k, stride, pad, oh, ow, cols.data());
            ConstMatMap<T> cm(cols.data(), rows, cols_n);
            MatMap<T> ym(y.sample(i), out_c, cols_n);
            ym.noalias() = wm * cm;
            for (int oc = 0; oc < out_c; ++oc) ym.row(oc).array() += b.v[oc];
        }
    }

    // dx may be null when the input gradient is not needed (first layer).
    // accumulate_params=false gives the frozen-model path: only dx.
    // Per-sample parameter gradients land in scratch slabs inside the
    // parallel loop and are reduced serially in sample order afterwards, so
    // float accumulation order — hence every byte of a training run — does
    // not depend on the thread count.
    void backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx,
                  bool accumulate_params = true) {
        const int oh = dy.h, ow = dy.w;
        const int rows = in_c * k * k;
        const int cols_n = oh * ow;
        ConstMatMap<T> wm(w.data(), out_c, rows);
        if (dx) {
            *dx = Tensor<T>(x.n, in_c, x.h, x.w);
        }
        std::vector<T> gw_part, gb_part;
        if (accumulate_params) {
            gw_part.assign(static_cast<size_t>(x.n) * gw.size(), T(0));
            gb_part.assign(static_cast<size_t>(x.n) * out_c, T(0));
        }
#pragma omp parallel for schedule(static)
        for (int i = 0; i < x.n; ++i) {
            ConstMatMap<T> dym(dy.sample(i), out_c, cols_n);
            std::vector<T> cols(static_cast<size_t>(rows) * cols_n);
            if (accumulate_params) {
                im2col(x.sample(i), in_c, x.h, x.w, k, stride, pad, oh, ow, cols.data());
                ConstMatMap<T> cm(cols.data(), rows, cols_n);
                MatMap<T> gwm(gw_part.data() + static_cast<size_t>(i) * gw.size(),
                              out_c, rows);
                gwm.noalias() = dym * cm.transpose();
                T* gbp = gb_part.data() + static_cast<size_t>(i) * out_c;
                for (int oc = 0; oc < out_c; ++oc) gbp[oc] = dym.row(oc).sum();
            }
            if (dx) {
                MatMap<T> dcm(cols.data(), rows, cols_n);
                dcm.noalias() = wm.transpose() * dym;
                col2im_add(cols.data(), in_c, x.h, x.w, k, stride, pad, oh, ow,
                           dx->sample(i));
            }
        }
        if (accumulate_params) {
            for (int i = 0; i < x.n; ++i) {
                const T* gwp = gw_part.data() + static_cast<size_t>(i) * gw.size();
                for (size_t j = 0; j < gw.size(); ++j) gw.v[j] += gwp[j];
                const T* gbp = gb_part.data() + static_cast<size_t>(i) * out_c;
                for (int oc = 0; oc < out_c; ++oc) gb.v[oc] += gbp[oc];
            }
        }
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".w", &w, &gw});
        out.push_back({prefix + ".b", &b, &gb});
    }
};

template <class T>
struct Linear {
    int in_f = 0, out_f = 0;
    Tensor<T> w;  // (out_f, in_f, 1, 1)
    Tensor<T> b;
    Tensor<T> gw, gb;

    Linear() = default;
    Linear(int in_f_, int out_f_)
        : in_f(in_f_), out_f(out_f_), w(out_f_, in_f_, 1, 1), b(1, out_f_, 1, 1),
          gw(out_f_, in_f_, 1, 1), gb(1, out_f_, 1, 1) {}

    void init_he(Rng& rng) {
        const double std_dev = std::sqrt(2.0 / in_f);
        for (auto& v : w.v) v = static_cast<T>(rng.normal(0.0, std_dev));
        b.zero();
    }

    // x: (n, in_f) flattened rows; y: (n, out_f)
    void forward(const Tensor<T>& x, Tensor<T>& y) const {
        const int n = x.n;
        y = Tensor<T>(n, out_f, 1, 1);
        ConstMatMap<T> xm(x.data(), n, in_f);
        ConstMatMap<T> wm(w.data(), out_f, in_f);
        MatMap<T> ym(y.data(), n, out_f);
        ym.noalias() = xm * wm.transpose();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < out_f; ++j) ym(i, j) += b.v[j];
    }

    void backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx) {
        const int n = x.n;
        ConstMatMap<T> xm(x.data(), n, in_f);
        ConstMatMap<T> dym(dy.data(), n, out_f);
        MatMap<T> gwm(gw.data(), out_f, in_f);
        gwm.noalias() += dym.transpose() * xm;
        for (int j = 0; j < out_f; ++j) gb.v[j] += dym.col(j).sum();
        if (dx) {
            *dx = Tensor<T>(n, in_f, 1, 1);
            ConstMatMap<T> wm(w.data(), out_f, in_f);
            MatMap<T> dxm(dx->data(), n, in_f);
            dxm.noalias() = dym * wm;
        }
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".w", &w, &gw});
        out.push_back({prefix + ".b", &b, &gb});
    }
};

// Leaky rectifier. The plain ReLU variant is a death trap here: heatmap-MSE
// through a spatial softmax produces rare large gradient spikes, and a unit
// knocked negative for every input can never recover. The 0.1 leak keeps
// every unit trainable.
inline constexpr double kLeakySlope = 0.1;

template <class T>
void relu_forward(const Tensor<T>& x, Tensor<T>& y) {
    y = x;
    for (auto& v : y.v)
        if (v < T(0)) v *= T(kLeakySlope);
}

template <class T>
void relu_backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dx) {
    dx = dy;
    for (size_t i = 0; i < x.size(); ++i)
        if (x.v[i] <= T(0)) dx.v[i] *= T(kLeakySlope);
}

template <class T>
void upsample2x_forward(const Tensor<T>& x, Tensor<T>& y) {
    y = Tensor<T>(x.n, x.c, x.h * 2, x.w * 2);
    for (int i = 0; i < x.n; ++i)
        for (int c = 0; c < x.c; ++c)
            for (int yy = 0; yy < y.h; ++yy)
                for (int xx = 0; xx < y.w; ++xx)
                    y.at(i, c, yy, xx) = x.at(i, c, yy / 2, xx / 2);
}

template <class T>
void upsample2x_backward(const Tensor<T>& dy, Tensor<T>& dx, int in_h, int in_w) {
    dx = Tensor<T>(dy.n, dy.c, in_h, in_w);
    for (int i = 0; i < dy.n; ++i)
        for (int c = 0; c < dy.c; ++c)
            for (int yy = 0; yy < dy.h; ++yy)
                for (int xx = 0; xx < dy.w; ++xx)
                    dx.at(i, c, yy / 2, xx / 2) += dy.at(i, c, yy, xx);
}

template <class T>
void concat_channels(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& y) {
    POSEAC_CHECK(a.n == b.n && a.h == b.h && a.w == b.w, "concat shape mismatch");
    y = Tensor<T>(a.n, a.c + b.c, a.h, a.w);
    const size_t plane = static_cast<size_t>(a.h) * a.w;
    for (int i = 0; i < a.n; ++i) {
        std::copy(a.sample(i), a.sample(i) + a.c * plane, y.sample(i));
        std::copy(b.sample(i), b.sample(i) + b.c * plane, y.sample(i) + a.c * plane);
    }
}

template <class T>
void split_channels(const Tensor<T>& dy, Tensor<T>& da, Tensor<T>& db, int ca, int cb) {
    da = Tensor<T>(dy.n, ca, dy.h, dy.w);
    db = Tensor<T>(dy.n, cb, dy.h, dy.w);
    const size_t plane = static_cast<size_t>(dy.h) * dy.w;
    for (int i = 0; i < dy.n; ++i) {
        std::copy(dy.sample(i), dy.sample(i) + ca * plane, da.sample(i));
        std::copy(dy.sample(i) + ca * plane, dy.sample(i) + (ca + cb) * plane, db.sample(i));
    }
}

template <class T>
void clamp01_forward(const Tensor<T>& x, Tensor<T>& y) {
    y = x;
    for (auto& v : y.v) v = std::min(std::max(v, T(0)), T(1));
}

// Inclusive pass-through mask: gradients survive at exactly 0/1 so the
// zero-init residual corrector is trainable from the first step even on
// saturated input pixels.
template <class T>
void clamp01_backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dx) {
    dx = dy;
    for (size_t i = 0; i < x.size(); ++i)
        if (x.v[i] < T(0) || x.v[i] > T(1)) dx.v[i] = T(0);
}

template <class T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
    POSEAC_CHECK(a.same_shape(b), "add_inplace shape mismatch");
    for (size_t i = 0; i < a.size(); ++i) a.v[i] += b.v[i];
}

// Per-channel spatial softmax with temperature: y = softmax(x / T) over H*W.
template <class T>
void spatial_softmax_forward(const Tensor<T>& x, T temperature, Tensor<T>& y) {
    y = Tensor<T>(x.n, x.c, x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int i = 0; i < x.n; ++i) {
        for (int c = 0; c < x.c; ++c) {
            const T* xs = x.sample(i) + c * plane;
            T* ys = y.sample(i) + c * plane;
            T mx = xs[0];
            for (size_t p = 1; p < plane; ++p) mx = std::max(mx, xs[p]);
            T sum = T(0);
            for (size_t p = 0; p < plane; ++p) {
                ys[p] = std::exp((xs[p] - mx) / temperature);
                sum += ys[p];
            }
            for (size_t p = 0; p < plane; ++p) ys[p] /= sum;
        }
    }
}

template <class T>
void spatial_softmax_backward(const Tensor<T>& y, const Tensor<T>& dy, T temperature,
                              Tensor<T>& dx) {
    dx = Tensor<T>(y.n, y.c, y.h, y.w);
    const size_t plane = static_cast<size_t>(y.h) * y.w;
    for (int i = 0; i < y.n; ++i) {
        for (int c = 0; c < y.c; ++c) {
            const T* ys = y.sample(i) + c * plane;
            const T* dys = dy.sample(i) + c * plane;
            T* dxs = dx.sample(i) + c * plane;
            T dot = T(0);
            for (size_t p = 0; p < plane; ++p) dot += ys[p] * dys[p];
            for (size_t p = 0; p < plane; ++p) dxs[p] = ys[p] * (dys[p] - dot) / temperature;
        }
    }
}

}  // namespace poseac::nn
