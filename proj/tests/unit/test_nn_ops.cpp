#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bacnet/error.hpp"
#include "bacnet/nn/graph.hpp"
#include "bacnet/nn/ops.hpp"
#include "support/gradcheck.hpp"

using namespace bacnet::nn;
using bacnet::CounterRng;
using bacnet::Errc;
using gradcheck::random_tensor;

namespace {

// Seven nested loops over (n, co, oy, ox, ci, ky, kx).
Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor* b, int stride, int pad, int groups) {
    const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int cout = w.dim(0), cpg = w.dim(1), kh = w.dim(2), kw = w.dim(3);
    const int oh = (h + 2 * pad - kh) / stride + 1, ow = (wd + 2 * pad - kw) / stride + 1;
    const int opg = cout / groups;
    (void)cin;
    Tensor out({n, cout, oh, ow});
    for (int in = 0; in < n; ++in)
        for (int co = 0; co < cout; ++co)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    long double acc = b ? (*b)[static_cast<std::size_t>(co)] : 0.0;
                    for (int ci = 0; ci < cpg; ++ci)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                                acc += static_cast<long double>(x.at(in, (co / opg) * cpg + ci, iy, ix)) *
                                       w.at(co, ci, ky, kx);
                            }
                    out.at(in, co, oy, ox) = static_cast<real>(acc);
                }
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.shape() == b.shape());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i] - b[i])));
    return m;
}

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const bacnet::Error& e) {
        return e.code();
    }
    FAIL("expected bacnet::Error");
    return Errc::IoError;
}

}  // namespace

TEST_CASE("conv2d small cases") {
    const Tensor ones({1, 1, 3, 3}, 1.0);
    const Tensor out = conv2d_forward(ones, Tensor({1, 1, 3, 3}, 1.0), nullptr, {});
    REQUIRE(out.shape() == Shape{1, 1, 1, 1});
    CHECK(out[0] == 9.0);

    CounterRng rng(1);
    const Tensor x = random_tensor({2, 3, 4, 5}, rng);
    Tensor eye({3, 3, 1, 1});
    for (int c = 0; c < 3; ++c) eye.at(c, c, 0, 0) = 1.0;
    const Tensor zero_bias({3});
    CHECK(conv2d_forward(x, eye, &zero_bias, {}) == x);
    CHECK(conv_out_size(224, 3, 2, 1) == 112);
    CHECK(conv_out_size(7, 3, 1, 0) == 5);
}

TEST_CASE("conv2d matches the seven-loop reference") {
    CounterRng rng(2);
    const Tensor x = random_tensor({2, 4, 5, 5}, rng);
    const Tensor w = random_tensor({3, 4, 3, 3}, rng);
    const Tensor b = random_tensor({3}, rng);
    CHECK(max_abs_diff(conv2d_forward(x, w, &b, {2, 1, 1}), naive_conv(x, w, &b, 2, 1, 1)) < 1e-10);

    for (int trial = 0; trial < 40; ++trial) {
        const int groups = 1 + static_cast<int>(rng.uniform_below(3));
        const int cin = groups * (1 + static_cast<int>(rng.uniform_below(3)));
        const int cout = groups * (1 + static_cast<int>(rng.uniform_below(3)));
        const int k = 1 + static_cast<int>(rng.uniform_below(5));
        const int stride = 1 + static_cast<int>(rng.uniform_below(3));
        const int pad = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(k)));
        const int h = k + static_cast<int>(rng.uniform_below(8)), wd = k + static_cast<int>(rng.uniform_below(8));
        const Tensor xi = random_tensor({1 + static_cast<int>(rng.uniform_below(2)), cin, h, wd}, rng);
        const Tensor wi = random_tensor({cout, cin / groups, k, k}, rng);
        const Tensor bi = random_tensor({cout}, rng);
        CAPTURE(trial);
        CHECK(max_abs_diff(conv2d_forward(xi, wi, &bi, {stride, pad, groups}),
                           naive_conv(xi, wi, &bi, stride, pad, groups)) < 1e-10);
    }
}

TEST_CASE("conv2d shape errors") {
    const Tensor x({1, 4, 5, 5});
    CHECK(code_of([&] { conv2d_forward(x, Tensor({2, 3, 3, 3}), nullptr, {}); }) == Errc::ShapeMismatch);
    CHECK(code_of([&] { conv2d_forward(x, Tensor({3, 2, 3, 3}), nullptr, {1, 0, 2}); }) != Errc::CorruptFile);
    CHECK(code_of([&] { conv2d_forward(x, Tensor({2, 4, 7, 7}), nullptr, {}); }) == Errc::ShapeMismatch);
}

TEST_CASE("depthwise convolution") {
    CounterRng rng(3);
    const Tensor x = random_tensor({2, 5, 7, 6}, rng);
    Tensor delta({5, 1, 3, 3});
    for (int c = 0; c < 5; ++c) delta.at(c, 0, 1, 1) = 1.0;
    CHECK(depthwise_conv2d_forward(x, delta, 1, 1) == x);

    for (int stride : {1, 2})
        for (int k : {3, 5}) {
            const Tensor w = random_tensor({5, 1, k, k}, rng);
            CHECK(max_abs_diff(depthwise_conv2d_forward(x, w, stride, k / 2),
                               conv2d_forward(x, w, nullptr, {stride, k / 2, 5})) < 1e-10);
            CHECK(max_abs_diff(depthwise_conv2d_forward(x, w, stride, k / 2), naive_conv(x, w, nullptr, stride, k / 2, 5)) <
                  1e-10);
        }

    LayerGraph g;
    g.add_input(32);
    const int w = g.add_parameter("dw.weight", Tensor({32, 1, 3, 3}));
    const int b = g.add_parameter("dw.bias", Tensor({32}));
    g.add_node("dw", op::Conv{{1, 1, 32}, w, b}, {0});
    CHECK(g.param_count() == 320);
}

TEST_CASE("channel shuffle") {
    Tensor x({1, 6, 1, 2});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<real>(i);
    CHECK(channel_shuffle(x, 1) == x);
    const Tensor y = channel_shuffle(x, 2);
    const int expected[6] = {0, 3, 1, 4, 2, 5};
    for (int c = 0; c < 6; ++c) CHECK(y.at(0, c, 0, 1) == x.at(0, expected[c], 0, 1));
    CHECK(channel_shuffle(channel_shuffle(x, 2), 3) == x);
    CHECK(channel_shuffle_backward(y, 2) == x);
    CHECK(code_of([&] { channel_shuffle(x, 4); }) == Errc::IndivisibleChannels);

    CounterRng rng(4);
    const Tensor r = random_tensor({3, 12, 3, 3}, rng);
    auto a = channel_shuffle(r, 3);
    std::vector<real> sa(a.values().begin(), a.values().end()), sr(r.values().begin(), r.values().end());
    std::sort(sa.begin(), sa.end());
    std::sort(sr.begin(), sr.end());
    CHECK(sa == sr);
}

TEST_CASE("pointwise and pooling definitions") {
    CHECK(activate(7.0, Activation::ReLU6) == 6.0);
    CHECK(activate(-1.0, Activation::ReLU6) == 0.0);
    CHECK(activate(-1.0, Activation::ReLU) == 0.0);
    CHECK(activate(1.5, Activation::HardSwish) == doctest::Approx(1.5 * 4.5 / 6.0));
    CHECK(activate(4.0, Activation::HardSwish) == 4.0);
    CHECK(activate(-4.0, Activation::HardSwish) == 0.0);
    CHECK(activate(0.0, Activation::HardSigmoid) == 0.5);
    CHECK(activate(1.0, Activation::SiLU) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    CHECK(activate(0.0, Activation::Sigmoid) == 0.5);

    const Tensor c({2, 3, 4, 5}, 0.7);
    const Tensor pooled = global_avg_pool_forward(c);
    REQUIRE(pooled.shape() == Shape{2, 3, 1, 1});
    for (real v : pooled.values()) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));

    CHECK(max_pool_out_size(112, {3, 2, 0, true}) == 56);
    CHECK(max_pool_out_size(112, {3, 2, 0, false}) == 55);
    CHECK(max_pool_out_size(112, {3, 2, 1, false}) == 56);
    Tensor m({1, 1, 3, 3});
    for (std::size_t i = 0; i < 9; ++i) m[i] = static_cast<real>(i);
    const Tensor mp = max_pool_forward(m, {2, 2, 0, true});
    REQUIRE(mp.shape() == Shape{1, 1, 2, 2});
    CHECK(mp[0] == 4.0);
    CHECK(mp[1] == 5.0);
    CHECK(mp[2] == 7.0);
    CHECK(mp[3] == 8.0);
}

TEST_CASE("batch norm forms") {
    CounterRng rng(5);
    const Tensor x = random_tensor({2, 3, 2, 2}, rng);
    const Tensor gamma = random_tensor({3}, rng), beta = random_tensor({3}, rng);
    const Tensor mean = random_tensor({3}, rng), var = random_tensor({3}, rng, 0.5, 2.0);
    const Tensor y = batchnorm_inference(x, gamma, beta, mean, var, 1e-5);
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 3; ++c)
            CHECK(y.at(n, c, 1, 0) ==
                  doctest::Approx((x.at(n, c, 1, 0) - mean[c]) / std::sqrt(var[c] + 1e-5) * gamma[c] + beta[c]));

    BatchNormCache cache;
    const Tensor t = batchnorm_train_forward(x, Tensor({3}, 1.0), Tensor({3}), 1e-5, cache);
    for (int c = 0; c < 3; ++c) {
        double s = 0.0, s2 = 0.0;
        for (int n = 0; n < 2; ++n)
            for (int h = 0; h < 2; ++h)
                for (int w = 0; w < 2; ++w) {
                    s += t.at(n, c, h, w);
                    s2 += t.at(n, c, h, w) * t.at(n, c, h, w);
                }
        CHECK(s / 8 == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(s2 / 8 == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("train-mode batch norm updates running statistics with momentum 0.1") {
    LayerGraph g;
    g.add_input(1);
    op::BatchNorm bn;
    bn.gamma = g.add_parameter("bn.weight", Tensor({1}, 1.0));
    bn.beta = g.add_parameter("bn.bias", Tensor({1}));
    bn.running_mean = Tensor({1});
    bn.running_var = Tensor({1}, 1.0);
    g.add_node("bn", bn, {0});
    const Tensor x({1, 1, 1, 4}, std::vector<real>{1, 2, 3, 6});
    ForwardCache cache;
    g.forward(x, Mode::Train, cache);
    const auto& state = std::get<op::BatchNorm>(g.nodes()[1].op);
    // mean 3, unbiased variance 14/3
    CHECK(state.running_mean[0] == doctest::Approx(0.3));
    CHECK(state.running_var[0] == doctest::Approx(0.9 + 0.1 * 14.0 / 3.0));
}

TEST_CASE("softmax") {
    const Tensor u({1, 32}, 3.0);
    const Tensor su = softmax(u);
    for (real v : su.values()) CHECK(v == doctest::Approx(1.0 / 32).epsilon(1e-15));
    CounterRng rng(6);
    const Tensor r = random_tensor({7, 11}, rng, -30, 30);
    const Tensor s = softmax(r);
    for (int n = 0; n < 7; ++n) {
        double sum = 0.0;
        for (int k = 0; k < 11; ++k) sum += s[static_cast<std::size_t>(n * 11 + k)];
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("linear gradient by hand") {
    // y = W x + b with W 2x3, x 1x3, upstream g.
    const Tensor x({1, 3}, std::vector<real>{1, 2, 3});
    const Tensor w({2, 3}, std::vector<real>{1, 0, -1, 2, 1, 0});
    const Tensor g({1, 2}, std::vector<real>{0.5, -2});
    const auto grads = linear_backward(x, w, true, g);
    const std::vector<real> dw = {0.5, 1, 1.5, -2, -4, -6};
    CHECK(std::vector<real>(grads.weight.values().begin(), grads.weight.values().end()) == dw);
    CHECK(grads.bias[0] == 0.5);
    CHECK(grads.bias[1] == -2);
    // dx = W^T g
    CHECK(grads.input[0] == doctest::Approx(0.5 - 4));
    CHECK(grads.input[1] == doctest::Approx(-2));
    CHECK(grads.input[2] == doctest::Approx(-0.5));
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
    for (const auto& kase : gradcheck::layer_cases()) {
        CounterRng rng(9);
        LayerGraph g;
        Tensor x;
        Mode mode = Mode::Eval;
        kase.make(0, rng, g, x, mode);
        ForwardCache cache;
        CounterRng drop(1);
        const Tensor y = g.forward(x, mode, cache, &drop);
        g.zero_grad();
        const Tensor dx = g.backward(cache, Tensor(y.shape()));
        CAPTURE(kase.kind);
        CHECK(std::all_of(dx.values().begin(), dx.values().end(), [](real v) { return v == 0.0; }));
        for (const auto& p : g.parameters())
            CHECK(std::all_of(p.grad.values().begin(), p.grad.values().end(), [](real v) { return v == 0.0; }));
    }
}

TEST_CASE("finite-difference gradients for every layer kind") {
    // A light version of the acceptance sweep: five shapes per kind.
    for (const auto& kase : gradcheck::layer_cases()) {
        for (int trial = 0; trial < 5; ++trial) {
            CounterRng rng(1000 + static_cast<std::uint64_t>(trial), bacnet::fnv1a64(kase.kind));
            LayerGraph g;
            Tensor x;
            Mode mode = Mode::Eval;
            kase.make(trial, rng, g, x, mode);
            const auto r = gradcheck::check(g, x, mode, static_cast<std::uint64_t>(trial));
            CAPTURE(kase.kind);
            CAPTURE(r.worst);
            CHECK(r.checked > 0);
            CHECK(r.max_error < 1e-4);
        }
    }
}
