// Finite-difference gradient checks for every layer and for the composed
// training chains, all in double precision. Central differences with a fixed
// seed serve as the independent oracle for the hand-written backward passes.

#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "poseac/corrector/corrector.hpp"
#include "poseac/nn/heatmap.hpp"
#include "poseac/nn/layers.hpp"
#include "poseac/nn/losses.hpp"
#include "poseac/posenet/posenet.hpp"
#include "test_util.hpp"

using poseac::Rng;
using poseac::nn::Tensor;
using poseac::testutil::central_diff;
using poseac::testutil::fill_uniform;
using poseac::testutil::rel_err;

namespace {

// J = sum(W o y): a fixed random weighting makes every output element
// contribute a distinct signal, so transposed/misplaced gradients cannot
// cancel out.
struct WeightedSum {
    Tensor<double> w;

    WeightedSum(int n, int c, int h, int wd, Rng& rng) : w(n, c, h, wd) {
        fill_uniform(w, rng, -1.0, 1.0);
    }

    double value(const Tensor<double>& y) const {
        REQUIRE(y.same_shape(w));
        double s = 0;
        for (size_t i = 0; i < y.size(); ++i) s += w.v[i] * y.v[i];
        return s;
    }
};

void expect_close(double analytic, double fd, double tol, double floor_abs) {
    if (std::abs(analytic - fd) <= floor_abs) {
        CHECK(true);
        return;
    }
    INFO("analytic=" << analytic << " fd=" << fd << " rel=" << rel_err(analytic, fd));
    CHECK(rel_err(analytic, fd) <= tol);
}

std::vector<size_t> sample_slots(size_t size, size_t want, Rng& rng) {
    std::vector<size_t> all(size);
    std::iota(all.begin(), all.end(), size_t{0});
    rng.shuffle(all);
    if (all.size() > want) all.resize(want);
    return all;
}

// Checks d eval / d param at sampled slots against entries of `analytic`.
void check_tensor_grad(Tensor<double>& param, const Tensor<double>& analytic,
                       size_t n_slots, Rng& rng, const std::function<double()>& eval,
                       double tol = 1e-6, double floor_abs = 1e-8, double eps = 1e-5) {
    REQUIRE(param.same_shape(analytic));
    for (size_t s : sample_slots(param.size(), n_slots, rng)) {
        const double fd = central_diff(param.v[s], eps, eval);
        expect_close(analytic.v[s], fd, tol, floor_abs);
    }
}

}  // namespace

TEST_CASE("conv2d gradients match finite differences") {
    struct Case {
        int k, stride, pad;
    };
    for (const Case cs : {Case{3, 1, 1}, Case{3, 2, 1}, Case{1, 1, 0}}) {
        CAPTURE(cs.k);
        CAPTURE(cs.stride);
        Rng rng(77);
        poseac::nn::Conv2d<double> conv(3, 4, cs.k, cs.stride, cs.pad);
        conv.init_he(rng);
        fill_uniform(conv.b, rng, -0.3, 0.3);

        Tensor<double> x(2, 3, 7, 5);
        fill_uniform(x, rng, -1.0, 1.0);
        Tensor<double> y;
        conv.forward(x, y);
        WeightedSum obj(y.n, y.c, y.h, y.w, rng);

        auto eval = [&]() {
            Tensor<double> yy;
            conv.forward(x, yy);
            return obj.value(yy);
        };

        conv.gw.zero();
        conv.gb.zero();
        Tensor<double> dx;
        conv.backward(x, obj.w, &dx, true);

        check_tensor_grad(conv.w, conv.gw, 24, rng, eval);
        check_tensor_grad(conv.b, conv.gb, 4, rng, eval);
        check_tensor_grad(x, dx, 24, rng, eval);
    }
}

TEST_CASE("conv2d backward accumulates parameter gradients") {
    Rng rng(5);
    poseac::nn::Conv2d<double> conv(2, 2, 3, 1, 1);
    conv.init_he(rng);
    Tensor<double> x(1, 2, 4, 4), y, dy(1, 2, 4, 4);
    fill_uniform(x, rng, -1.0, 1.0);
    fill_uniform(dy, rng, -1.0, 1.0);
    conv.forward(x, y);

    conv.gw.zero();
    conv.gb.zero();
    conv.backward(x, dy, nullptr, true);
    const Tensor<double> once = conv.gw;
    conv.backward(x, dy, nullptr, true);
    for (size_t i = 0; i < once.size(); ++i)
        CHECK(conv.gw.v[i] == doctest::Approx(2.0 * once.v[i]).epsilon(1e-12));

    // accumulate_params=false must leave parameter gradients untouched.
    const Tensor<double> before = conv.gw;
    Tensor<double> dx;
    conv.backward(x, dy, &dx, false);
    for (size_t i = 0; i < before.size(); ++i) CHECK(conv.gw.v[i] == before.v[i]);
}

TEST_CASE("linear gradients match finite differences") {
    Rng rng(78);
    poseac::nn::Linear<double> lin(6, 4);
    lin.init_he(rng);
    fill_uniform(lin.b, rng, -0.3, 0.3);

    Tensor<double> x(3, 6, 1, 1);
    fill_uniform(x, rng, -1.0, 1.0);
    Tensor<double> y;
    lin.forward(x, y);
    WeightedSum obj(y.n, y.c, y.h, y.w, rng);

    auto eval = [&]() {
        Tensor<double> yy;
        lin.forward(x, yy);
        return obj.value(yy);
    };

    lin.gw.zero();
    lin.gb.zero();
    Tensor<double> dx;
    lin.backward(x, obj.w, &dx);

    check_tensor_grad(lin.w, lin.gw, 24, rng, eval);
    check_tensor_grad(lin.b, lin.gb, 4, rng, eval);
    check_tensor_grad(x, dx, 18, rng, eval);
}

TEST_CASE("relu gradient matches finite differences away from the kink") {
    Rng rng(79);
    Tensor<double> x(2, 3, 4, 4);
    // Keep every entry at least 0.1 away from zero so eps never crosses it.
    for (auto& v : x.v) {
        const double u = rng.uniform(0.1, 1.0);
        v = rng.uniform() < 0.5 ? -u : u;
    }
    Tensor<double> y;
    poseac::nn::relu_forward(x, y);
    WeightedSum obj(y.n, y.c, y.h, y.w, rng);

    auto eval = [&]() {
        Tensor<double> yy;
        poseac::nn::relu_forward(x, yy);
        return obj.value(yy);
    };

    Tensor<double> dx;
    poseac::nn::relu_backward(x, obj.w, dx);
    check_tensor_grad(x, dx, 32, rng, eval);
}

TEST_CASE("upsample2x gradient matches finite differences") {
    Rng rng(80);
    Tensor<double> x(2, 3, 3, 4);
    fill_uniform(x, rng, -1.0, 1.0);
    Tensor<double> y;
    poseac::nn::upsample2x_forward(x, y);
    CHECK(y.h == 6);
    CHECK(y.w == 8);
    WeightedSum obj(y.n, y.c, y.h, y.w, rng);

    auto eval = [&]() {
        Tensor<double> yy;
        poseac::nn::upsample2x_forward(x, yy);
        return obj.value(yy);
    };

    Tensor<double> dx;
    poseac::nn::upsample2x_backward(obj.w, dx, x.h, x.w);
    check_tensor_grad(x, dx, 32, rng, eval);
}

TEST_CASE("concat/split channel gradients are exact adjoints") {
    Rng rng(81);
    Tensor<double> a(2, 3, 4, 5), b(2, 2, 4, 5);
    fill_uniform(a, rng, -1.0, 1.0);
    fill_uniform(b, rng, -1.0, 1.0);
    Tensor<double> y;
    poseac::nn::concat_channels(a, b, y);
    WeightedSum obj(y.n, y.c, y.h, y.w, rng);

    auto eval = [&]() {
        Tensor<double> yy;
        poseac::nn::concat_channels(a, b, yy);
        return obj.value(yy);
    };

    Tensor<double> da, db;
    poseac::nn::split_channels(obj.w, da, db, a.c, b.c);
    check_tensor_grad(a, da, 24, rng, eval);
    check_tensor_grad(b, db, 24, rng, eval);
}

TEST_CASE("clamp01 gradient matches finite differences in the interior") {
    Rng rng(82);
    Tensor<double> x(2, 3, 4, 4);
    // Mix of interior, below-0 and above-1 entries, all >= 0.05 from the
    // clamp boundaries so central differences stay one-sided-free.
    for (auto& v : x.v) {
        const double r = rng.uniform();
        if (r < 0.6)
            v = rng.uniform(0.05, 0.95);
        else if (r < 0.8)
            v = rng.uniform(-1.0, -0.05);
        else
            v = rng.uniform(1.05, 2.0);
    }
    Tensor<double> y;
    poseac::nn::clamp01_forward(x, y);
    WeightedSum obj(y.n, y.c, y.h, y.w, rng);

    auto eval = [&]() {
        Tensor<double> yy;
        poseac::nn::clamp01_forward(x, yy);
        return obj.value(yy);
    };

    Tensor<double> dx;
    poseac::nn::clamp01_backward(x, obj.w, dx);
    check_tensor_grad(x, dx, 48, rng, eval);
}

TEST_CASE("spatial softmax gradient matches finite differences (temperature != 1)") {
    for (const double temp : {1.0, 0.5, 2.0}) {
        CAPTURE(temp);
        Rng rng(83);
        Tensor<double> x(2, 3, 4, 5);
        fill_uniform(x, rng, -2.0, 2.0);
        Tensor<double> y;
        poseac::nn::spatial_softmax_forward(x, temp, y);
        WeightedSum obj(y.n, y.c, y.h, y.w, rng);

        auto eval = [&]() {
            Tensor<double> yy;
            poseac::nn::spatial_softmax_forward(x, temp, yy);
            return obj.value(yy);
        };

        Tensor<double> dx;
        poseac::nn::spatial_softmax_backward(y, obj.w, temp, dx);
        check_tensor_grad(x, dx, 40, rng, eval, 1e-6, 1e-9);
    }
}

TEST_CASE("spatial softmax rows are normalized probability maps") {
    Rng rng(84);
    Tensor<double> x(3, 4, 5, 6);
    fill_uniform(x, rng, -30.0, 30.0);
    Tensor<double> y;
    poseac::nn::spatial_softmax_forward(x, 0.7, y);
    const size_t plane = static_cast<size_t>(y.h) * y.w;
    for (int i = 0; i < y.n; ++i)
        for (int c = 0; c < y.c; ++c) {
            const double* p = y.sample(i) + c * plane;
            double sum = 0;
            for (size_t j = 0; j < plane; ++j) {
                CHECK(p[j] >= 0.0);
                sum += p[j];
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
}

TEST_CASE("soft argmax gradient matches finite differences") {
    Rng rng(85);
    const double stride = 4.0;
    Tensor<double> probs(2, 3, 4, 5);
    fill_uniform(probs, rng, 0.01, 1.0);  // not normalized; the op is linear anyway

    Tensor<double> coords;
    poseac::nn::soft_argmax(probs, stride, coords);
    WeightedSum obj(coords.n, coords.c, coords.h, coords.w, rng);

    auto eval = [&]() {
        Tensor<double> cc;
        poseac::nn::soft_argmax(probs, stride, cc);
        return obj.value(cc);
    };

    Tensor<double> dprobs(probs.n, probs.c, probs.h, probs.w);
    dprobs.zero();
    poseac::nn::soft_argmax_backward(obj.w, stride, dprobs);
    check_tensor_grad(probs, dprobs, 40, rng, eval);
}

TEST_CASE("heatmap_mse value and gradient match finite differences") {
    Rng rng(86);
    const double scale = 100.0;
    Tensor<double> pred(3, 2, 4, 4), target(3, 2, 4, 4), dpred(3, 2, 4, 4);
    fill_uniform(pred, rng, 0.0, 0.2);
    fill_uniform(target, rng, 0.0, 0.2);

    // Value oracle: direct formula, scale * mean over batch of summed sq err.
    double want = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.v[i] - target.v[i];
        want += d * d;
    }
    want *= scale / pred.n;
    const double got = poseac::nn::heatmap_mse(pred, target, dpred, scale);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));

    auto eval = [&]() {
        Tensor<double> d(pred.n, pred.c, pred.h, pred.w);
        return poseac::nn::heatmap_mse(pred, target, d, scale);
    };
    check_tensor_grad(pred, dpred, 32, rng, eval, 1e-6, 1e-9, 1e-6);
}

TEST_CASE("l1_coord_loss value and gradient match finite differences") {
    Rng rng(87);
    Tensor<double> pred(3, 4, 2, 1), target(3, 4, 2, 1);
    fill_uniform(pred, rng, 0.0, 40.0);
    // Keep targets at least 0.5 away from predictions so eps never crosses
    // the |.| kink.
    for (size_t i = 0; i < target.size(); ++i) {
        const double off = rng.uniform(0.5, 8.0);
        target.v[i] = pred.v[i] + (rng.uniform() < 0.5 ? -off : off);
    }

    Tensor<double> dcoords;
    const double got = poseac::nn::l1_coord_loss(pred, target, dcoords);

    double want = 0;
    for (size_t i = 0; i < pred.size(); ++i) want += std::abs(pred.v[i] - target.v[i]);
    want /= pred.n;
    CHECK(got == doctest::Approx(want).epsilon(1e-12));

    auto eval = [&]() {
        Tensor<double> d;
        return poseac::nn::l1_coord_loss(pred, target, d);
    };
    check_tensor_grad(pred, dcoords, 24, rng, eval);
}

TEST_CASE("softmax_cross_entropy value and gradient match finite differences") {
    Rng rng(88);
    Tensor<double> logits(4, 5, 1, 1), dlogits(4, 5, 1, 1);
    fill_uniform(logits, rng, -2.0, 2.0);
    std::vector<int> labels;
    for (int i = 0; i < logits.n; ++i) labels.push_back(rng.uniform_int(0, logits.c - 1));

    const double got = poseac::nn::softmax_cross_entropy(logits, labels, dlogits);

    // Value oracle: direct log-sum-exp formula.
    double want = 0;
    for (int i = 0; i < logits.n; ++i) {
        const double* z = logits.sample(i);
        double mx = z[0];
        for (int c = 1; c < logits.c; ++c) mx = std::max(mx, z[c]);
        double lse = 0;
        for (int c = 0; c < logits.c; ++c) lse += std::exp(z[c] - mx);
        want += (mx + std::log(lse)) - z[labels[i]];
    }
    want /= logits.n;
    CHECK(got == doctest::Approx(want).epsilon(1e-12));

    auto eval = [&]() {
        Tensor<double> d(logits.n, logits.c, 1, 1);
        return poseac::nn::softmax_cross_entropy(logits, labels, d);
    };
    check_tensor_grad(logits, dlogits, 20, rng, eval);
}

TEST_CASE("posenet parameter gradients (heatmap objective) match finite differences") {
    poseac::PoseNetConfig pc;
    pc.in_h = 16;
    pc.in_w = 12;
    pc.in_c = 3;
    pc.n_joints = 4;
    pc.widths = {4, 4, 8, 8};
    pc.softmax_temp = 0.8;

    Rng rng(90);
    poseac::PoseNetT<double> net(pc);
    net.init(rng);

    Tensor<double> x(2, pc.in_c, pc.in_h, pc.in_w);
    fill_uniform(x, rng, 0.0, 1.0);

    Tensor<double> target(2, pc.n_joints, pc.map_h(), pc.map_w());
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < pc.n_joints; ++k)
            poseac::nn::render_gaussian_target(
                target, i, k,
                poseac::Vec2{float(rng.uniform(2.0, pc.in_w - 2.0)),
                             float(rng.uniform(2.0, pc.in_h - 2.0))},
                double(pc.stride), 1.5);

    const double scale = 100.0;
    auto eval = [&]() {
        poseac::PoseNetT<double>::Acts a;
        net.forward(x, a);
        Tensor<double> d(a.probs.n, a.probs.c, a.probs.h, a.probs.w);
        return poseac::nn::heatmap_mse(a.probs, target, d, scale);
    };

    poseac::PoseNetT<double>::Acts acts;
    net.forward(x, acts);
    Tensor<double> dprobs(acts.probs.n, acts.probs.c, acts.probs.h, acts.probs.w);
    poseac::nn::heatmap_mse(acts.probs, target, dprobs, scale);
    for (auto& p : net.params()) p.grad->zero();
    net.backward(x, acts, dprobs, nullptr, true);

    // eps 1e-6: with zero-init biases many pre-activations sit near the ReLU
    // kink, and a coarser step makes the *finite difference* (not the
    // analytic gradient) wrong by up to a few percent.
    for (auto& p : net.params()) {
        CAPTURE(p.name);
        check_tensor_grad(*p.value, *p.grad, 6, rng, eval, 1e-4, 1e-6, 1e-6);
    }
}

TEST_CASE("posenet input gradient via frozen backward matches finite differences") {
    poseac::PoseNetConfig pc;
    pc.in_h = 8;
    pc.in_w = 8;
    pc.in_c = 3;
    pc.n_joints = 3;
    pc.widths = {4, 4, 8, 8};

    Rng rng(91);
    poseac::PoseNetT<double> net(pc);
    net.init(rng);

    Tensor<double> x(2, pc.in_c, pc.in_h, pc.in_w);
    fill_uniform(x, rng, 0.0, 1.0);

    Tensor<double> target(2, pc.n_joints, 2, 1);
    fill_uniform(target, rng, 0.0, 8.0);

    auto eval = [&]() {
        poseac::PoseNetT<double>::Acts a;
        net.forward(x, a);
        Tensor<double> coords, d;
        poseac::nn::soft_argmax(a.probs, double(pc.stride), coords);
        return poseac::nn::l1_coord_loss(coords, target, d);
    };

    poseac::PoseNetT<double>::Acts acts;
    net.forward(x, acts);
    Tensor<double> coords, dcoords;
    poseac::nn::soft_argmax(acts.probs, double(pc.stride), coords);
    poseac::nn::l1_coord_loss(coords, target, dcoords);
    Tensor<double> dprobs(acts.probs.n, acts.probs.c, acts.probs.h, acts.probs.w);
    dprobs.zero();
    poseac::nn::soft_argmax_backward(dcoords, double(pc.stride), dprobs);

    // Frozen path: parameter grads must stay exactly zero.
    for (auto& p : net.params()) p.grad->zero();
    Tensor<double> dx;
    net.backward(x, acts, dprobs, &dx, false);
    for (auto& p : net.params())
        for (double g : p.grad->v) CHECK(g == 0.0);

    check_tensor_grad(x, dx, 30, rng, eval, 1e-4, 1e-8);
}

TEST_CASE("corrector parameter gradients through the frozen pose model match "
          "finite differences") {
    poseac::CorrectorConfig cc;
    cc.in_c = 3;
    cc.scales = {4, 6, 8};
    cc.skips = true;

    poseac::PoseNetConfig pc;
    pc.in_h = 8;
    pc.in_w = 8;
    pc.in_c = 3;
    pc.n_joints = 3;
    pc.widths = {4, 4, 8, 8};

    Rng rng(92);
    poseac::CorrectorT<double> corr(cc);
    corr.init(rng);
    // The zero-initialized output conv blocks all upstream gradients at init;
    // nudge it so the whole chain carries signal, keeping the residual small
    // enough that clamp01 stays in its interior.
    fill_uniform(corr.conv_out.w, rng, -0.02, 0.02);
    fill_uniform(corr.conv_out.b, rng, -0.01, 0.01);

    poseac::PoseNetT<double> pose(pc);
    pose.init(rng);

    Tensor<double> x(2, cc.in_c, 8, 8);
    fill_uniform(x, rng, 0.2, 0.8);
    Tensor<double> target(2, pc.n_joints, 2, 1);
    fill_uniform(target, rng, 0.0, 8.0);
    const double qf = 0.37;

    auto eval = [&]() {
        poseac::CorrectorT<double>::Acts ca;
        const auto& y = corr.forward(x, qf, ca);
        poseac::PoseNetT<double>::Acts pa;
        pose.forward(y, pa);
        Tensor<double> coords, d;
        poseac::nn::soft_argmax(pa.probs, double(pc.stride), coords);
        return poseac::nn::l1_coord_loss(coords, target, d);
    };

    poseac::CorrectorT<double>::Acts ca;
    const auto& y = corr.forward(x, qf, ca);
    poseac::PoseNetT<double>::Acts pa;
    pose.forward(y, pa);
    Tensor<double> coords, dcoords;
    poseac::nn::soft_argmax(pa.probs, double(pc.stride), coords);
    poseac::nn::l1_coord_loss(coords, target, dcoords);
    Tensor<double> dprobs(pa.probs.n, pa.probs.c, pa.probs.h, pa.probs.w);
    dprobs.zero();
    poseac::nn::soft_argmax_backward(dcoords, double(pc.stride), dprobs);

    for (auto& p : pose.params()) p.grad->zero();
    for (auto& p : corr.params()) p.grad->zero();
    Tensor<double> dimg;
    pose.backward(y, pa, dprobs, &dimg, false);
    corr.backward(ca, dimg, true);

    // Frozen pose model: untouched gradients.
    for (auto& p : pose.params())
        for (double g : p.grad->v) CHECK(g == 0.0);

    int checked = 0;
    for (auto& p : corr.params()) {
        CAPTURE(p.name);
        check_tensor_grad(*p.value, *p.grad, 4, rng, eval, 1e-3, 1e-8);
        checked += static_cast<int>(std::min<size_t>(4, p.value->size()));
    }
    CHECK(checked >= 10);
}

TEST_CASE("corrector without skip connections also matches finite differences") {
    poseac::CorrectorConfig cc;
    cc.in_c = 3;
    cc.scales = {4, 6, 8};
    cc.skips = false;

    Rng rng(93);
    poseac::CorrectorT<double> corr(cc);
    corr.init(rng);
    fill_uniform(corr.conv_out.w, rng, -0.02, 0.02);

    Tensor<double> x(1, 3, 8, 8);
    fill_uniform(x, rng, 0.2, 0.8);
    const double qf = 0.5;

    poseac::CorrectorT<double>::Acts ca;
    const auto& y0 = corr.forward(x, qf, ca);
    WeightedSum obj(y0.n, y0.c, y0.h, y0.w, rng);

    auto eval = [&]() {
        poseac::CorrectorT<double>::Acts a;
        return obj.value(corr.forward(x, qf, a));
    };

    for (auto& p : corr.params()) p.grad->zero();
    corr.backward(ca, obj.w, true);

    for (auto& p : corr.params()) {
        CAPTURE(p.name);
        check_tensor_grad(*p.value, *p.grad, 4, rng, eval, 1e-4, 1e-8);
    }
}
