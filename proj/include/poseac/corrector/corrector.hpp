#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseac/core/image.hpp"
#include "poseac/core/pose_types.hpp"
#include "poseac/core/rng.hpp"
#include "poseac/nn/checkpoint.hpp"
#include "poseac/nn/layers.hpp"

namespace poseac {

// Quality-conditioned residual corrector: 3-level encoder-decoder with skip
// concats and a zero-initialized output conv, so the untrained model is an
// exact identity. The quality factor rides along as a constant input channel.
struct CorrectorConfig {
    int in_c = 3;
    std::array<int, 3> scales{8, 16, 32};
    double quality_factor = 0.5;  // conditioning value used by the pipeline
    bool skips = true;

    nlohmann::json to_json() const;
    static CorrectorConfig from_json(const nlohmann::json& j);
    void validate() const;
};

template <class T>
struct CorrectorT {
    CorrectorConfig cfg;
    nn::Conv2d<T> conv_in, down1, down2, bott, up1, up0, conv_out;

    struct Acts {
        nn::Tensor<T> xq, a0, e0, a1, e1, a2, e2, ab, b;
        nn::Tensor<T> uu1, c1, ad1, d1, uu0, c0, ad0, d0;
        nn::Tensor<T> delta, pre, y;
    };

    explicit CorrectorT(const CorrectorConfig& cfg_ = {})
        : cfg(cfg_),
          conv_in(cfg_.in_c + 1, cfg_.scales[0], 3, 1, 1),
          down1(cfg_.scales[0], cfg_.scales[1], 3, 2, 1),
          down2(cfg_.scales[1], cfg_.scales[2], 3, 2, 1),
          bott(cfg_.scales[2], cfg_.scales[2], 3, 1, 1),
          up1(cfg_.scales[2] + (cfg_.skips ? cfg_.scales[1] : 0), cfg_.scales[1], 3, 1, 1),
          up0(cfg_.scales[1] + (cfg_.skips ? cfg_.scales[0] : 0), cfg_.scales[0], 3, 1, 1),
          conv_out(cfg_.scales[0], cfg_.in_c, 3, 1, 1) {}

    void init(Rng& rng) {
        conv_in.init_he(rng);
        down1.init_he(rng);
        down2.init_he(rng);
        bott.init_he(rng);
        up1.init_he(rng);
        up0.init_he(rng);
        conv_out.init_zero();  // identity at init
    }

    const nn::Tensor<T>& forward(const nn::Tensor<T>& x, T qf, Acts& a) const {
        POSEAC_CHECK(x.c == cfg.in_c, "corrector input channels");
        POSEAC_CHECK(x.h % 4 == 0 && x.w % 4 == 0, "corrector input must be /4");
        POSEAC_CHECK(qf >= T(0) && qf <= T(1), "quality factor outside [0,1]");
        nn::Tensor<T> qmap(x.n, 1, x.h, x.w);
        std::fill(qmap.v.begin(), qmap.v.end(), qf);
        nn::concat_channels(x, qmap, a.xq);

        conv_in.forward(a.xq, a.a0);
        nn::relu_forward(a.a0, a.e0);
        down1.forward(a.e0, a.a1);
        nn::relu_forward(a.a1, a.e1);
        down2.forward(a.e1, a.a2);
        nn::relu_forward(a.a2, a.e2);
        bott.forward(a.e2, a.ab);
        nn::relu_forward(a.ab, a.b);

        nn::upsample2x_forward(a.b, a.uu1);
        if (cfg.skips)
            nn::concat_channels(a.uu1, a.e1, a.c1);
        else
            a.c1 = a.uu1;
        up1.forward(a.c1, a.ad1);
        nn::relu_forward(a.ad1, a.d1);

        nn::upsample2x_forward(a.d1, a.uu0);
        if (cfg.skips)
            nn::concat_channels(a.uu0, a.e0, a.c0);
        else
            a.c0 = a.uu0;
        up0.forward(a.c0, a.ad0);
        nn::relu_forward(a.ad0, a.d0);

        conv_out.forward(a.d0, a.delta);
        a.pre = x;
        nn::add_inplace(a.pre, a.delta);
        nn::clamp01_forward(a.pre, a.y);
        return a.y;
    }

    void backward(const Acts& a, const nn::Tensor<T>& dy, bool accumulate_params = true) {
        nn::Tensor<T> ddelta, t, dd0, dc0, duu0, de0_skip, dd1, dc1, duu1, de1_skip;
        nn::Tensor<T> db, de2, de1, de0;
        nn::clamp01_backward(a.pre, dy, ddelta);

        conv_out.backward(a.d0, ddelta, &dd0, accumulate_params);
        nn::relu_backward(a.ad0, dd0, t);
        up0.backward(a.c0, t, &dc0, accumulate_params);
        if (cfg.skips)
            nn::split_channels(dc0, duu0, de0_skip, cfg.scales[1], cfg.scales[0]);
        else
            duu0 = dc0;
        nn::upsample2x_backward(duu0, dd1, a.d1.h, a.d1.w);

        nn::relu_backward(a.ad1, dd1, t);
        up1.backward(a.c1, t, &dc1, accumulate_params);
        if (cfg.skips)
            nn::split_channels(dc1, duu1, de1_skip, cfg.scales[2], cfg.scales[1]);
        else
            duu1 = dc1;
        nn::upsample2x_backward(duu1, db, a.b.h, a.b.w);

        nn::relu_backward(a.ab, db, t);
        bott.backward(a.e2, t, &de2, accumulate_params);
        nn::relu_backward(a.a2, de2, t);
        down2.backward(a.e1, t, &de1, accumulate_params);
        if (cfg.skips) nn::add_inplace(de1, de1_skip);
        nn::relu_backward(a.a1, de1, t);
        down1.backward(a.e0, t, &de0, accumulate_params);
        if (cfg.skips) nn::add_inplace(de0, de0_skip);
        nn::relu_backward(a.a0, de0, t);
        conv_in.backward(a.xq, t, nullptr, accumulate_params);
    }

    std::vector<nn::ParamRef<T>> params() {
        std::vector<nn::ParamRef<T>> out;
        conv_in.collect_params("conv_in", out);
        down1.collect_params("down1", out);
        down2.collect_params("down2", out);
        bott.collect_params("bott", out);
        up1.collect_params("up1", out);
        up0.collect_params("up0", out);
        conv_out.collect_params("conv_out", out);
        return out;
    }
};

using Corrector = CorrectorT<float>;

void save_corrector(const std::string& path, Corrector& net, const nlohmann::json& meta);
Corrector load_corrector(const std::string& path);

// Pure single-frame convenience wrapper around forward().
Image correct_image(const Corrector& net, const Image& frame, double quality_factor);

// Batched variant used by evaluation; preserves order.
std::vector<Image> correct_images(const Corrector& net, const std::vector<Image>& frames,
                                  double quality_factor, int batch_size = 16);

// Per-frame keypoint loss: sum over all coordinates of |pred - gt|.
double loss_ac(const Pose& pred, const Pose& gt);

}  // namespace poseac
