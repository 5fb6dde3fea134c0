#include "gradcheck.hpp"

#include <numeric>

namespace gradcheck {

namespace op = bacnet::nn::op;
using bacnet::nn::Activation;
using bacnet::nn::ConvGeometry;
using bacnet::nn::MaxPoolGeometry;

namespace {

int pick(CounterRng& rng, int lo, int hi) { return lo + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(hi - lo + 1))); }

Tensor input(CounterRng& rng, int n, int c, int h, int w, double lo = -1.0, double hi = 1.0) {
    return random_tensor({n, c, h, w}, rng, lo, hi);
}

int add_conv(LayerGraph& g, CounterRng& rng, int from, int cin, int cout, int k, ConvGeometry geo, bool bias) {
    const int w = g.add_parameter("conv.weight", random_tensor({cout, cin / geo.groups, k, k}, rng));
    const int b = bias ? g.add_parameter("conv.bias", random_tensor({cout}, rng)) : -1;
    return g.add_node("conv", op::Conv{geo, w, b}, {from});
}

Case conv_case(std::string kind, int mode) {
    // mode 0: dense, 1: grouped, 2: depthwise
    return {std::move(kind), [mode](int, CounterRng& rng, LayerGraph& g, Tensor& x, Mode& m) {
                m = Mode::Eval;
                int groups = 1, cin = 0, cout = 0;
                if (mode == 0) {
                    cin = pick(rng, 1, 4);
                    cout = pick(rng, 1, 4);
                } else if (mode == 1) {
                    groups = pick(rng, 2, 3);
                    cin = groups * pick(rng, 1, 2);
                    cout = groups * pick(rng, 1, 2);
                } else {
                    cin = cout = groups = pick(rng, 1, 5);
                }
                const int k = mode == 2 ? (rng.uniform() < 0.5 ? 3 : 5) : pick(rng, 1, 3);
                const int stride = pick(rng, 1, 2);
                const int pad = pick(rng, 0, k / 2);
                const int h = pick(rng, std::max(k, 3), 7);
                const int w = pick(rng, std::max(k, 3), 7);
                g.add_input(cin);
                add_conv(g, rng, 0, cin, cout, k, ConvGeometry{stride, pad, groups}, rng.uniform() < 0.5);
                x = input(rng, pick(rng, 1, 2), cin, h, w);
            }};
}

Case batchnorm_case(std::string kind, Mode mode) {
    return {std::move(kind), [mode](int, CounterRng& rng, LayerGraph& g, Tensor& x, Mode& m) {
                m = mode;
                const int c = pick(rng, 1, 4);
                g.add_input(c);
                op::BatchNorm bn;
                bn.gamma = g.add_parameter("bn.weight", random_tensor({c}, rng, 0.5, 1.5));
                bn.beta = g.add_parameter("bn.bias", random_tensor({c}, rng));
                bn.running_mean = random_tensor({c}, rng);
                bn.running_var = random_tensor({c}, rng, 0.5, 2.0);
                g.add_node("bn", std::move(bn), {0});
                // Train mode needs at least two values per channel.
                x = input(rng, pick(rng, 1, 3), c, pick(rng, 2, 4), pick(rng, 2, 4));
            }};
}

Case activation_case(std::string kind, Activation a, std::vector<double> kinks) {
    return {std::move(kind), [a, kinks](int, CounterRng& rng, LayerGraph& g, Tensor& x, Mode& m) {
                m = Mode::Eval;
                const int c = pick(rng, 1, 4);
                g.add_input(c);
                g.add_node("act", op::Act{a}, {0});
                x = input(rng, pick(rng, 1, 2), c, pick(rng, 1, 5), pick(rng, 1, 5), -5.0, 8.0);
                avoid_kinks(x, kinks);
            }};
}

}  // namespace

std::vector<Case> layer_cases() {
    std::vector<Case> cases;
    cases.push_back(conv_case("conv2d", 0));
    cases.push_back(conv_case("grouped_conv2d", 1));
    cases.push_back(conv_case("depthwise_conv2d", 2));
    cases.push_back(batchnorm_case("batchnorm_train", Mode::Train));
    cases.push_back(batchnorm_case("batchnorm_eval", Mode::Eval));
    cases.push_back(activation_case("relu", Activation::ReLU, {0.0}));
    cases.push_back(activation_case("relu6", Activation::ReLU6, {0.0, 6.0}));
    cases.push_back(activation_case("hardswish", Activation::HardSwish, {-3.0, 3.0}));
    cases.push_back(activation_case("hardsigmoid", Activation::HardSigmoid, {-3.0, 3.0}));
    cases.push_back(activation_case("silu", Activation::SiLU, {}));
    cases.push_back(activation_case("sigmoid", Activation::Sigmoid, {}));

    cases.push_back({"global_avg_pool", [](int, CounterRng& rng, LayerGraph& g, Tensor& x, Mode& m) {
                         m = Mode::Eval;
                         const int c = pick(rng, 1, 4);
                         g.add_input(c);
                         g.add_node("gap", op::GlobalAvgPool{}, {0});
                         x = input(rng, pick(rng, 1, 2), c, pick(rng, 1, 6), pick(rng, 1, 6));
                     }});
    cases.push_back({"max_pool", [](int, CounterRng& rng, LayerGraph& g, Tensor& x, Mode& m) {
                         m = Mode::Eval;
                         const int c = pick(rng, 1, 3);
                         const int k = pick(rng, 2, 3);
                         MaxPoolGeometry geo{k, pick(rng, 1, 2), pick(rng, 0, k / 2), rng.uniform() < 0.5};
                         g.add_input(c);
                         g.add_node("pool", op::MaxPool{geo}, {0});
                         const int n = pick(rng, 1, 2), h = pick(rng, k, 7), w = pick(rng, k, 7);
                         // Distinct, well separated values so no step changes an argmax.
                         x = Tensor({n, c, h, w});
                         std::vector<std::size_t> order(x.size());
                         std::iota(order.begin(), order.end(), std::size_t{0});
                         bacnet::shuffle(std::span<std::size_t>(order), rng);
                         for (std::size_t i = 0; i < order.size(); ++i) x[i] = static_cast<real>(0.05 * order[i] - 1.0);
                     }});
    cases.push_back({"linear", [](int, CounterRng& rng, LayerGraph& g, Tensor& x, Mode& m) {
                         m = Mode::Eval;
                         const int c = pick(rng, 1, 4), h = pick(rng, 1, 3), w = pick(rng, 1, 3);
                         const int out = pick(rng, 1, 5);
                         g.add_input(c);
                         const int f = g.add_node("flatten", op::Flatten{}, {0});
                         const int wt = g.add_parameter("fc.weight", random_tensor({out, c * h * w}, rng));
                         const int b = g.add_parameter("fc.bias", random_tensor({out}, rng));
                         g.add_node("fc", op::Linear{wt, b}, {f});
                         x = input(rng, pick(rng, 1, 3), c, h, w);
                     }});
    cases.push_back({"flatten", [](int, CounterRng& rng, LayerGraph& g, Tensor& x, Mode& m) {
                         m = Mode::Eval;
                         const int c = pick(rng, 1, 4);
                         g.add_input(c);
                         g.add_node("flatten", op::Flatten{}, {0});
                         x = input(rng, pick(rng, 1, 3), c, pick(rng, 1, 4), pick(rng, 1, 4));
                     }});
    cases.push_back({"dropout", [](int, CounterRng& rng, LayerGraph& g, Tensor& x, Mode& m) {
                         m = Mode::Train;
                         const int c = pick(rng, 1, 4);
                         g.add_input(c);
                         g.add_node("drop", op::Dropout{rng.uniform(0.1, 0.6)}, {0});
                         x = input(rng, pick(rng, 1, 3), c, pick(rng, 1, 4), pick(rng, 1, 4));
                     }});
    cases.push_back({"add", [](int, CounterRng& rng, LayerGraph& g, Tensor& x, Mode& m) {
                         m = Mode::Eval;
                         const int half = pick(rng, 1, 3);
                         g.add_input(2 * half);
                         const int a = g.add_node("lo", op::Slice{0, half}, {0});
                         const int b = g.add_node("hi", op::Slice{half, 2 * half}, {0});
                         const int s = g.add_node("act", op::Act{Activation::Sigmoid}, {b});
                         g.add_node("add", op::Add{}, {a, s});
                         x = input(rng, pick(rng, 1, 2), 2 * half, pick(rng, 1, 4), pick(rng, 1, 4));
                     }});
    cases.push_back({"concat", [](int, CounterRng& rng, LayerGraph& g, Tensor& x, Mode& m) {
                         m = Mode::Eval;
                         const int c = pick(rng, 2, 5);
                         g.add_input(c);
                         const int s = g.add_node("act", op::Act{Activation::SiLU}, {0});
                         const int part = g.add_node("slice", op::Slice{1, c}, {0});
                         g.add_node("cat", op::Concat{}, {s, part, 0});
                         x = input(rng, pick(rng, 1, 2), c, pick(rng, 1, 4), pick(rng, 1, 4));
                     }});
    cases.push_back({"slice", [](int, CounterRng& rng, LayerGraph& g, Tensor& x, Mode& m) {
                         m = Mode::Eval;
                         const int c = pick(rng, 2, 6);
                         const int begin = pick(rng, 0, c - 1);
                         const int end = pick(rng, begin + 1, c);
                         g.add_input(c);
                         g.add_node("slice", op::Slice{begin, end}, {0});
                         x = input(rng, pick(rng, 1, 2), c, pick(rng, 1, 4), pick(rng, 1, 4));
                     }});
    cases.push_back({"channel_shuffle", [](int, CounterRng& rng, LayerGraph& g, Tensor& x, Mode& m) {
                         m = Mode::Eval;
                         const int groups = pick(rng, 1, 3);
                         const int c = groups * pick(rng, 1, 3);
                         g.add_input(c);
                         g.add_node("shuffle", op::ChannelShuffle{groups}, {0});
                         x = input(rng, pick(rng, 1, 2), c, pick(rng, 1, 4), pick(rng, 1, 4));
                     }});
    cases.push_back({"scale", [](int, CounterRng& rng, LayerGraph& g, Tensor& x, Mode& m) {
                         m = Mode::Eval;
                         const int c = pick(rng, 1, 4);
                         g.add_input(c);
                         const int pooled = g.add_node("gap", op::GlobalAvgPool{}, {0});
                         const int gate = g.add_node("gate", op::Act{Activation::Sigmoid}, {pooled});
                         g.add_node("scale", op::Scale{}, {0, gate});
                         x = input(rng, pick(rng, 1, 2), c, pick(rng, 1, 4), pick(rng, 1, 4));
                     }});
    return cases;
}

}  // namespace gradcheck
