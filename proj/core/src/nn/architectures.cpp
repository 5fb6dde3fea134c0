// Builders for the supported architectures. Stage tables follow the original
// publications as packaged by torchvision:
//   MobileNetV2     - Sandler et al. 2018, Table 2
//   MobileNetV3     - Howard et al. 2019, Tables 1 (large) and 2 (small)
//   ShuffleNetV2    - Ma et al. 2018, Table 5
//   SqueezeNet      - Iandola et al. 2016, Table 1 (v1.0) and the v1.1 release notes
//   EfficientNet    - Tan & Le 2019, Table 1 (B0) with the published B1/B2 factors
#include "bacnet/nn/architectures.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bacnet/error.hpp"

namespace bacnet::nn {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

// Thin helper that tracks channel counts while appending named layers.
class Builder {
public:
    explicit Builder(int in_channels) {
        graph_.add_input(in_channels);
        channels_.push_back(in_channels);
    }

    int channels(int node) const { return channels_.at(static_cast<std::size_t>(node)); }

    int conv(const std::string& name, int x, int out, int kernel, int stride, int padding, int groups, bool bias) {
        const int in = channels(x);
        const int w = graph_.add_parameter(name + ".weight", Tensor({out, in / groups, kernel, kernel}));
        const int b = bias ? graph_.add_parameter(name + ".bias", Tensor({out})) : -1;
        return push(name, op::Conv{ConvGeometry{stride, padding, groups}, w, b}, {x}, out);
    }

    int batchnorm(const std::string& name, int x) {
        const int c = channels(x);
        op::BatchNorm bn;
        bn.gamma = graph_.add_parameter(name + ".weight", Tensor({c}, real(1)));
        bn.beta = graph_.add_parameter(name + ".bias", Tensor({c}));
        bn.running_mean = Tensor({c});
        bn.running_var = Tensor({c}, real(1));
        bn.eps = kBnEps;
        bn.momentum = kBnMomentum;
        return push(name, std::move(bn), {x}, c);
    }

    int act(const std::string& name, int x, Activation kind) { return push(name, op::Act{kind}, {x}, channels(x)); }

    /// Conv (no bias) + BN + optional activation, named prefix.0 / prefix.1 / prefix.2.
    int conv_bn(const std::string& prefix, int x, int out, int kernel, int stride, int groups,
                std::optional<Activation> activation) {
        int y = conv(prefix + ".0", x, out, kernel, stride, (kernel - 1) / 2, groups, false);
        y = batchnorm(prefix + ".1", y);
        if (activation) y = act(prefix + ".2", y, *activation);
        return y;
    }

    int max_pool(const std::string& name, int x, MaxPoolGeometry g) { return push(name, op::MaxPool{g}, {x}, channels(x)); }
    int global_pool(const std::string& name, int x) { return push(name, op::GlobalAvgPool{}, {x}, channels(x)); }
    int flatten(const std::string& name, int x) { return push(name, op::Flatten{}, {x}, channels(x)); }
    int dropout(const std::string& name, int x, double p) { return push(name, op::Dropout{p}, {x}, channels(x)); }

    int linear(const std::string& name, int x, int out) {
        const int in = channels(x);
        const int w = graph_.add_parameter(name + ".weight", Tensor({out, in}));
        const int b = graph_.add_parameter(name + ".bias", Tensor({out}));
        return push(name, op::Linear{w, b}, {x}, out);
    }

    int add(const std::string& name, int a, int b) { return push(name, op::Add{}, {a, b}, channels(a)); }

    int concat(const std::string& name, std::vector<int> xs) {
        int total = 0;
        for (int x : xs) total += channels(x);
        return push(name, op::Concat{}, std::move(xs), total);
    }

    int slice(const std::string& name, int x, int begin, int end) {
        return push(name, op::Slice{begin, end}, {x}, end - begin);
    }

    int shuffle(const std::string& name, int x, int groups) {
        return push(name, op::ChannelShuffle{groups}, {x}, channels(x));
    }

    int scale(const std::string& name, int x, int gate) { return push(name, op::Scale{}, {x, gate}, channels(x)); }

    LayerGraph finish(std::uint64_t seed) {
        initialize(graph_, seed);
        return std::move(graph_);
    }

private:
    int push(const std::string& name, Op o, std::vector<int> inputs, int out_channels) {
        const int id = graph_.add_node(name, std::move(o), std::move(inputs));
        channels_.push_back(out_channels);
        return id;
    }

    LayerGraph graph_;
    std::vector<int> channels_;
};

// Squeeze-excite gate: pool -> fc1 -> inner -> fc2 -> gate, then scale x.
int squeeze_excite(Builder& b, const std::string& prefix, int x, int squeeze, Activation inner, Activation gate) {
    const int c = b.channels(x);
    int s = b.global_pool(prefix + ".avgpool", x);
    s = b.conv(prefix + ".fc1", s, squeeze, 1, 1, 0, 1, true);
    s = b.act(prefix + ".activation", s, inner);
    s = b.conv(prefix + ".fc2", s, c, 1, 1, 0, 1, true);
    s = b.act(prefix + ".scale_activation", s, gate);
    return b.scale(prefix + ".scale", x, s);
}

int inverted_residual(Builder& b, const std::string& prefix, int x, const InvertedResidualConfig& cfg) {
    if (b.channels(x) != cfg.in_channels) {
        throw Error(Errc::ShapeMismatch, prefix + ": block expects " + std::to_string(cfg.in_channels) + " channels");
    }
    const bool v2 = cfg.naming == ResidualNaming::MobileNetV2;
    const std::string stem = prefix + (v2 ? ".conv." : ".block.");
    int idx = 0;
    auto next = [&] { return stem + std::to_string(idx++); };

    int y = x;
    if (cfg.expanded_channels != cfg.in_channels) {
        y = b.conv_bn(next(), y, cfg.expanded_channels, 1, 1, 1, cfg.activation);
    }
    y = b.conv_bn(next(), y, cfg.expanded_channels, cfg.kernel, cfg.stride, cfg.expanded_channels, cfg.activation);
    if (cfg.se_channels) y = squeeze_excite(b, next(), y, *cfg.se_channels, cfg.se_inner, cfg.se_gate);
    if (v2) {
        // MobileNetV2 keeps the linear projection conv and its BN as siblings.
        const std::string conv_name = next();
        y = b.conv(conv_name, y, cfg.out_channels, 1, 1, 0, 1, false);
        y = b.batchnorm(next(), y);
    } else {
        y = b.conv_bn(next(), y, cfg.out_channels, 1, 1, 1, std::nullopt);
    }
    if (cfg.stride == 1 && cfg.in_channels == cfg.out_channels) y = b.add(prefix + ".residual", y, x);
    return y;
}

int fire(Builder& b, const std::string& prefix, int x, const FireConfig& cfg) {
    int s = b.conv(prefix + ".squeeze", x, cfg.squeeze, 1, 1, 0, 1, true);
    s = b.act(prefix + ".squeeze_activation", s, Activation::ReLU);
    int e1 = b.conv(prefix + ".expand1x1", s, cfg.expand1x1, 1, 1, 0, 1, true);
    e1 = b.act(prefix + ".expand1x1_activation", e1, Activation::ReLU);
    int e3 = b.conv(prefix + ".expand3x3", s, cfg.expand3x3, 3, 1, 1, 1, true);
    e3 = b.act(prefix + ".expand3x3_activation", e3, Activation::ReLU);
    return b.concat(prefix + ".cat", {e1, e3});
}

int shuffle_unit(Builder& b, const std::string& prefix, int x, const ShuffleUnitConfig& cfg) {
    const int branch = cfg.out_channels / 2;
    if (cfg.out_channels % 2 != 0) throw Error(Errc::IndivisibleChannels, prefix + ": odd output channel count");
    if (cfg.stride == 1 && cfg.in_channels != branch * 2) {
        throw Error(Errc::ShapeMismatch, prefix + ": stride-1 unit must preserve channels");
    }
    auto branch2 = [&](int in) {
        int y = b.conv(prefix + ".branch2.0", in, branch, 1, 1, 0, 1, false);
        y = b.batchnorm(prefix + ".branch2.1", y);
        y = b.act(prefix + ".branch2.2", y, Activation::ReLU);
        y = b.conv(prefix + ".branch2.3", y, branch, 3, cfg.stride, 1, branch, false);
        y = b.batchnorm(prefix + ".branch2.4", y);
        y = b.conv(prefix + ".branch2.5", y, branch, 1, 1, 0, 1, false);
        y = b.batchnorm(prefix + ".branch2.6", y);
        return b.act(prefix + ".branch2.7", y, Activation::ReLU);
    };
    int out = 0;
    if (cfg.stride == 1) {
        const int left = b.slice(prefix + ".split0", x, 0, branch);
        const int right = b.slice(prefix + ".split1", x, branch, 2 * branch);
        out = b.concat(prefix + ".cat", {left, branch2(right)});
    } else {
        const int in = cfg.in_channels;
        int y = b.conv(prefix + ".branch1.0", x, in, 3, cfg.stride, 1, in, false);
        y = b.batchnorm(prefix + ".branch1.1", y);
        y = b.conv(prefix + ".branch1.2", y, branch, 1, 1, 0, 1, false);
        y = b.batchnorm(prefix + ".branch1.3", y);
        y = b.act(prefix + ".branch1.4", y, Activation::ReLU);
        out = b.concat(prefix + ".cat", {y, branch2(x)});
    }
    return b.shuffle(prefix + ".shuffle", out, 2);
}

// ---------------------------------------------------------------------------

const std::vector<InvertedResidualSetting>& mobilenet_v2_table() {
    static const std::vector<InvertedResidualSetting> table = {
        {1, 16, 1, 1}, {6, 24, 2, 2}, {6, 32, 3, 2}, {6, 64, 4, 2}, {6, 96, 3, 1}, {6, 160, 3, 2}, {6, 320, 1, 1},
    };
    return table;
}

// MobileNetV3 bneck row: in, kernel, expanded, out, squeeze-excite, hard-swish, stride.
struct BneckRow {
    int in, kernel, expanded, out;
    bool se, hswish;
    int stride;
};

LayerGraph build_mobilenet_v3(bool large, int num_classes, double width_mult, std::uint64_t seed) {
    static const std::vector<BneckRow> large_table = {
        {16, 3, 16, 16, false, false, 1},   {16, 3, 64, 24, false, false, 2},  {24, 3, 72, 24, false, false, 1},
        {24, 5, 72, 40, true, false, 2},    {40, 5, 120, 40, true, false, 1},  {40, 5, 120, 40, true, false, 1},
        {40, 3, 240, 80, false, true, 2},   {80, 3, 200, 80, false, true, 1},  {80, 3, 184, 80, false, true, 1},
        {80, 3, 184, 80, false, true, 1},   {80, 3, 480, 112, true, true, 1},  {112, 3, 672, 112, true, true, 1},
        {112, 5, 672, 160, true, true, 2},  {160, 5, 960, 160, true, true, 1}, {160, 5, 960, 160, true, true, 1},
    };
    static const std::vector<BneckRow> small_table = {
        {16, 3, 16, 16, true, false, 2},   {16, 3, 72, 24, false, false, 2}, {24, 3, 88, 24, false, false, 1},
        {24, 5, 96, 40, true, true, 2},    {40, 5, 240, 40, true, true, 1},  {40, 5, 240, 40, true, true, 1},
        {40, 5, 120, 48, true, true, 1},   {48, 5, 144, 48, true, true, 1},  {48, 5, 288, 96, true, true, 2},
        {96, 5, 576, 96, true, true, 1},   {96, 5, 576, 96, true, true, 1},
    };
    const auto& table = large ? large_table : small_table;
    auto adjust = [&](int c) { return make_divisible(c * width_mult, 8); };

    Builder b(3);
    int x = b.conv_bn("features.0", 0, adjust(table.front().in), 3, 2, 1, Activation::HardSwish);
    int index = 1;
    for (const auto& row : table) {
        InvertedResidualConfig cfg;
        cfg.in_channels = adjust(row.in);
        cfg.expanded_channels = adjust(row.expanded);
        cfg.out_channels = adjust(row.out);
        cfg.kernel = row.kernel;
        cfg.stride = row.stride;
        cfg.activation = row.hswish ? Activation::HardSwish : Activation::ReLU;
        if (row.se) cfg.se_channels = make_divisible(cfg.expanded_channels / 4, 8);
        cfg.se_inner = Activation::ReLU;
        cfg.se_gate = Activation::HardSigmoid;
        cfg.naming = ResidualNaming::Block;
        x = inverted_residual(b, "features." + std::to_string(index++), x, cfg);
    }
    const int last_in = b.channels(x);
    x = b.conv_bn("features." + std::to_string(index), x, 6 * last_in, 1, 1, 1, Activation::HardSwish);
    x = b.global_pool("avgpool", x);
    x = b.flatten("flatten", x);
    x = b.linear("classifier.0", x, adjust(large ? 1280 : 1024));
    x = b.act("classifier.1", x, Activation::HardSwish);
    x = b.dropout("classifier.2", x, 0.2);
    b.linear("classifier.3", x, num_classes);
    return b.finish(seed);
}

LayerGraph build_shufflenet_v2(const std::array<int, 5>& widths, int num_classes, std::uint64_t seed) {
    static constexpr std::array<int, 3> kRepeats = {4, 8, 4};
    Builder b(3);
    int x = b.conv("conv1.0", 0, widths[0], 3, 2, 1, 1, false);
    x = b.batchnorm("conv1.1", x);
    x = b.act("conv1.2", x, Activation::ReLU);
    x = b.max_pool("maxpool", x, MaxPoolGeometry{3, 2, 1, false});
    int in = widths[0];
    for (int stage = 0; stage < 3; ++stage) {
        const int out = widths[static_cast<std::size_t>(stage) + 1];
        for (int i = 0; i < kRepeats[static_cast<std::size_t>(stage)]; ++i) {
            const std::string prefix = "stage" + std::to_string(stage + 2) + "." + std::to_string(i);
            x = shuffle_unit(b, prefix, x, ShuffleUnitConfig{i == 0 ? in : out, out, i == 0 ? 2 : 1});
        }
        in = out;
    }
    x = b.conv("conv5.0", x, widths[4], 1, 1, 0, 1, false);
    x = b.batchnorm("conv5.1", x);
    x = b.act("conv5.2", x, Activation::ReLU);
    x = b.global_pool("mean", x);
    x = b.flatten("flatten", x);
    b.linear("fc", x, num_classes);
    return b.finish(seed);
}

LayerGraph build_squeezenet(bool v1_1, int num_classes, std::uint64_t seed) {
    const MaxPoolGeometry pool{3, 2, 0, true};
    Builder b(3);
    int x = 0;
    auto f = [&](int index, int squeeze, int expand) {
        x = fire(b, "features." + std::to_string(index), x, FireConfig{b.channels(x), squeeze, expand, expand});
    };
    if (!v1_1) {
        x = b.conv("features.0", x, 96, 7, 2, 0, 1, true);
        x = b.act("features.1", x, Activation::ReLU);
        x = b.max_pool("features.2", x, pool);
        f(3, 16, 64);
        f(4, 16, 64);
        f(5, 32, 128);
        x = b.max_pool("features.6", x, pool);
        f(7, 32, 128);
        f(8, 48, 192);
        f(9, 48, 192);
        f(10, 64, 256);
        x = b.max_pool("features.11", x, pool);
        f(12, 64, 256);
    } else {
        x = b.conv("features.0", x, 64, 3, 2, 0, 1, true);
        x = b.act("features.1", x, Activation::ReLU);
        x = b.max_pool("features.2", x, pool);
        f(3, 16, 64);
        f(4, 16, 64);
        x = b.max_pool("features.5", x, pool);
        f(6, 32, 128);
        f(7, 32, 128);
        x = b.max_pool("features.8", x, pool);
        f(9, 48, 192);
        f(10, 48, 192);
        f(11, 64, 256);
        f(12, 64, 256);
    }
    x = b.dropout("classifier.0", x, 0.5);
    x = b.conv("classifier.1", x, num_classes, 1, 1, 0, 1, true);
    x = b.act("classifier.2", x, Activation::ReLU);
    x = b.global_pool("classifier.3", x);
    b.flatten("flatten", x);
    return b.finish(seed);
}

}  // namespace

int make_divisible(double v, int divisor) {
    int out = std::max(divisor, static_cast<int>(v + divisor / 2.0) / divisor * divisor);
    if (out < 0.9 * v) out += divisor;
    return out;
}

bool is_known_architecture(std::string_view name) noexcept {
    return std::find(kArchitectureNames.begin(), kArchitectureNames.end(), name) != kArchitectureNames.end();
}

void validate(const ArchitectureSpec& spec) {
    if (!is_known_architecture(spec.name)) throw Error(Errc::UnknownArchitecture, "'" + spec.name + "'");
    if (spec.num_classes < 2) throw Error(Errc::InvalidConfig, "num_classes must be >= 2");
    if (!(spec.width_mult > 0.0)) throw Error(Errc::InvalidConfig, "width_mult must be positive");
}

ScaleFactors compound_scale(const CompoundScale& cs) {
    if (!(cs.alpha > 0 && cs.beta > 0 && cs.gamma > 0)) {
        throw Error(Errc::InvalidConfig, "compound scale coefficients must be positive");
    }
    return {std::pow(cs.alpha, cs.phi), std::pow(cs.beta, cs.phi), std::pow(cs.gamma, cs.phi)};
}

LayerGraph build_mobilenet_v2(const MobileNetV2Config& cfg, std::uint64_t seed) {
    const auto& table = cfg.settings.empty() ? mobilenet_v2_table() : cfg.settings;
    Builder b(3);
    int in = make_divisible(cfg.first_channels * cfg.width_mult, 8);
    const int last = make_divisible(cfg.last_channels * std::max(1.0, cfg.width_mult), 8);
    int x = b.conv_bn("features.0", 0, in, 3, 2, 1, Activation::ReLU6);
    int index = 1;
    for (const auto& s : table) {
        const int out = make_divisible(s.channels * cfg.width_mult, 8);
        for (int i = 0; i < s.repeats; ++i) {
            InvertedResidualConfig block;
            block.in_channels = in;
            block.expanded_channels = static_cast<int>(std::lround(in * static_cast<double>(s.expand_ratio)));
            block.out_channels = out;
            block.kernel = 3;
            block.stride = i == 0 ? s.stride : 1;
            block.activation = Activation::ReLU6;
            block.naming = ResidualNaming::MobileNetV2;
            x = inverted_residual(b, "features." + std::to_string(index++), x, block);
            in = out;
        }
    }
    x = b.conv_bn("features." + std::to_string(index), x, last, 1, 1, 1, Activation::ReLU6);
    x = b.global_pool("avgpool", x);
    x = b.flatten("flatten", x);
    x = b.dropout("classifier.0", x, cfg.dropout);
    b.linear("classifier.1", x, cfg.num_classes);
    return b.finish(seed);
}

LayerGraph build_efficientnet(double width_factor, double depth_factor, int num_classes, double dropout,
                              std::uint64_t seed) {
    // expand ratio, kernel, stride, in, out, layers
    struct Stage {
        int expand, kernel, stride, in, out, layers;
    };
    static const std::vector<Stage> b0 = {
        {1, 3, 1, 32, 16, 1},  {6, 3, 2, 16, 24, 2},  {6, 5, 2, 24, 40, 2},   {6, 3, 2, 40, 80, 3},
        {6, 5, 1, 80, 112, 3}, {6, 5, 2, 112, 192, 4}, {6, 3, 1, 192, 320, 1},
    };
    auto adjust = [&](int c) { return make_divisible(c * width_factor, 8); };

    Builder b(3);
    int x = b.conv_bn("features.0", 0, adjust(b0.front().in), 3, 2, 1, Activation::SiLU);
    int stage_index = 1;
    for (const auto& st : b0) {
        const int layers = static_cast<int>(std::ceil(st.layers * depth_factor));
        int in = adjust(st.in);
        const int out = adjust(st.out);
        for (int i = 0; i < layers; ++i) {
            InvertedResidualConfig cfg;
            cfg.in_channels = in;
            cfg.expanded_channels = make_divisible(in * static_cast<double>(st.expand), 8);
            cfg.out_channels = out;
            cfg.kernel = st.kernel;
            cfg.stride = i == 0 ? st.stride : 1;
            cfg.activation = Activation::SiLU;
            cfg.se_channels = std::max(1, in / 4);
            cfg.se_inner = Activation::SiLU;
            cfg.se_gate = Activation::Sigmoid;
            cfg.naming = ResidualNaming::Block;
            x = inverted_residual(b, "features." + std::to_string(stage_index) + "." + std::to_string(i), x, cfg);
            in = out;
        }
        ++stage_index;
    }
    x = b.conv_bn("features." + std::to_string(stage_index), x, 4 * b.channels(x), 1, 1, 1, Activation::SiLU);
    x = b.global_pool("avgpool", x);
    x = b.flatten("flatten", x);
    x = b.dropout("classifier.0", x, dropout);
    b.linear("classifier.1", x, num_classes);
    return b.finish(seed);
}

LayerGraph build_architecture(const ArchitectureSpec& spec, std::uint64_t seed) {
    validate(spec);
    const std::string& n = spec.name;
    const int k = spec.num_classes;
    if (n == "efficientnet-b0") return build_efficientnet(1.0, 1.0, k, 0.2, seed);
    if (n == "efficientnet-b1") return build_efficientnet(1.0, 1.1, k, 0.2, seed);
    if (n == "efficientnet-b2") return build_efficientnet(1.1, 1.2, k, 0.3, seed);
    if (n == "mobilenet_v2") {
        MobileNetV2Config cfg;
        cfg.num_classes = k;
        cfg.width_mult = spec.width_mult;
        return build_mobilenet_v2(cfg, seed);
    }
    if (n == "mobilenet_v3_small") return build_mobilenet_v3(false, k, spec.width_mult, seed);
    if (n == "mobilenet_v3_large") return build_mobilenet_v3(true, k, spec.width_mult, seed);
    if (n == "shufflenet_v2_x0_5") return build_shufflenet_v2({24, 48, 96, 192, 1024}, k, seed);
    if (n == "shufflenet_v2_x1_0") return build_shufflenet_v2({24, 116, 232, 464, 1024}, k, seed);
    if (n == "shufflenet_v2_x1_5") return build_shufflenet_v2({24, 176, 352, 704, 1024}, k, seed);
    if (n == "shufflenet_v2_x2_0") return build_shufflenet_v2({24, 244, 488, 976, 2048}, k, seed);
    if (n == "squeezenet1_0") return build_squeezenet(false, k, seed);
    if (n == "squeezenet1_1") return build_squeezenet(true, k, seed);
    throw Error(Errc::UnknownArchitecture, "'" + n + "'");
}

LayerGraph build_block(const BlockConfig& cfg, std::uint64_t seed) {
    return std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            Builder b(c.in_channels);
            if constexpr (std::is_same_v<T, InvertedResidualConfig>) {
                inverted_residual(b, "block", 0, c);
            } else if constexpr (std::is_same_v<T, FireConfig>) {
                fire(b, "block", 0, c);
            } else {
                shuffle_unit(b, "block", 0, c);
            }
            return b.finish(seed);
        },
        cfg);
}

Tensor block_forward(const LayerGraph& block, const Tensor& x) { return block.infer(x); }

}  // namespace bacnet::nn
