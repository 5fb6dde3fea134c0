#include "doctest.h"

#include <cmath>
#include <map>

#include "bacnet/error.hpp"
#include "bacnet/nn/architectures.hpp"
#include "bacnet/train.hpp"
#include "support/gradcheck.hpp"

using namespace bacnet::nn;
using bacnet::CounterRng;
using bacnet::Errc;

namespace {

// Trainable parameter counts of the torchvision reference models.
const std::map<std::string, std::pair<std::size_t, std::size_t>> kReferenceCounts = {
    {"efficientnet-b0", {4048540, 5288548}},    {"efficientnet-b1", {6554176, 7794184}},
    {"efficientnet-b2", {7746082, 9109994}},    {"mobilenet_v2", {2264864, 3504872}},
    {"mobilenet_v3_small", {1550656, 2542856}}, {"mobilenet_v3_large", {4243024, 5483032}},
    {"shufflenet_v2_x0_5", {374592, 1366792}},  {"shufflenet_v2_x1_0", {1286404, 2278604}},
    {"shufflenet_v2_x1_5", {2511424, 3503624}}, {"shufflenet_v2_x2_0", {5410564, 7393996}},
    {"squeezenet1_0", {751840, 1248424}},       {"squeezenet1_1", {738912, 1235496}},
};

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

TEST_CASE("compound scaling") {
    const auto one = compound_scale({1.2, 1.1, 1.15, 0.0});
    CHECK(one.depth == 1.0);
    CHECK(one.width == 1.0);
    CHECK(one.resolution == 1.0);
    const auto unit = compound_scale({1.2, 1.1, 1.15, 1.0});
    CHECK(unit.depth == 1.2);
    CHECK(unit.resolution == 1.15);
    const auto two = compound_scale({1.2, 1.1, 1.15, 2.0});
    CHECK(two.depth == doctest::Approx(1.44).epsilon(1e-14));
    CHECK(two.width == doctest::Approx(1.21).epsilon(1e-14));
    CHECK(two.resolution == doctest::Approx(1.3225).epsilon(1e-14));
}

TEST_CASE("channel rounding") {
    CHECK(make_divisible(32 * 0.5) == 16);
    CHECK(make_divisible(24 * 1.1) == 24);
    CHECK(make_divisible(40 * 1.1) == 48);
    CHECK(make_divisible(1280 * 1.2) == 1536);
    CHECK(make_divisible(3.0) == 8);
}

TEST_CASE("parameter counts equal the reference models exactly") {
    for (const auto& [name, counts] : kReferenceCounts) {
        CAPTURE(name);
        CHECK(build_architecture({name, 32}).param_count() == counts.first);
        CHECK(build_architecture({name, 1000}).param_count() == counts.second);
    }
}

TEST_CASE("analytic counts") {
    LayerGraph g;
    g.add_input(3);
    const int w = g.add_parameter("c.weight", Tensor({8, 3, 3, 3}));
    const int b = g.add_parameter("c.bias", Tensor({8}));
    g.add_node("c", op::Conv{{}, w, b}, {0});
    CHECK(g.param_count() == 224);

    // mobilenet_v2's head is a 1280 -> K linear layer.
    const auto m = build_architecture({"mobilenet_v2", 32});
    const int head = find_head(m);
    const auto& lin = std::get<op::Linear>(m.nodes()[static_cast<std::size_t>(head)].op);
    CHECK(m.parameter(lin.weight).value.size() + m.parameter(lin.bias).value.size() == 40992);
}

TEST_CASE("invalid specs") {
    CHECK(code_of([] { build_architecture({"resnet50", 32}); }) == Errc::UnknownArchitecture);
    CHECK(code_of([] { build_architecture({"mobilenet_v2", 1}); }) == Errc::InvalidConfig);
    CHECK(code_of([] { build_architecture({"mobilenet_v2", 32, 0.0}); }) == Errc::InvalidConfig);
    CHECK_FALSE(is_known_architecture("efficientnet-b3"));
    for (auto n : kArchitectureNames) CHECK(is_known_architecture(n));
}

TEST_CASE("parameter names follow the torchvision layout") {
    const auto names = [](const LayerGraph& g) {
        std::vector<std::string> out;
        for (const auto& p : g.parameters()) out.push_back(p.name);
        return out;
    };
    const auto v2 = names(build_architecture({"mobilenet_v2", 32}));
    CHECK(v2.front() == "features.0.0.weight");
    CHECK(std::find(v2.begin(), v2.end(), "features.1.conv.0.0.weight") != v2.end());
    CHECK(std::find(v2.begin(), v2.end(), "features.2.conv.3.weight") != v2.end());
    CHECK(v2.back() == "classifier.1.bias");
    const auto sq = names(build_architecture({"squeezenet1_1", 32}));
    CHECK(std::find(sq.begin(), sq.end(), "features.3.expand3x3.weight") != sq.end());
    CHECK(sq.back() == "classifier.1.bias");
    const auto sh = names(build_architecture({"shufflenet_v2_x1_0", 32}));
    CHECK(std::find(sh.begin(), sh.end(), "stage2.0.branch1.0.weight") != sh.end());
    CHECK(sh.back() == "fc.bias");
    const auto v3 = names(build_architecture({"mobilenet_v3_small", 32}));
    CHECK(std::find(v3.begin(), v3.end(), "features.1.block.1.fc1.weight") != v3.end());
    const auto b0 = names(build_architecture({"efficientnet-b0", 32}));
    CHECK(std::find(b0.begin(), b0.end(), "features.2.0.block.0.0.weight") != b0.end());
}

TEST_CASE("inferred shapes equal executed shapes and logits are finite") {
    CounterRng rng(3);
    const Tensor x = gradcheck::random_tensor({1, 3, 224, 224}, rng);
    for (auto name : kArchitectureNames) {
        CAPTURE(name);
        LayerGraph g = build_architecture({std::string(name), 32}, 1);
        const auto inferred = g.infer_shapes({1, 3, 224, 224});
        ForwardCache cache;
        const Tensor y = g.forward(x, Mode::Eval, cache);
        REQUIRE(cache.outputs.size() == inferred.size());
        for (std::size_t i = 0; i < inferred.size(); ++i) {
            CAPTURE(g.nodes()[i].name);
            CHECK(cache.outputs[i].shape() == inferred[i]);
        }
        CHECK(y.shape() == Shape{1, 32});
        CHECK(y.all_finite());
        CHECK(bacnet::predict(g, x) == y);
    }
}

TEST_CASE("predict") {
    const auto g = build_architecture({"squeezenet1_1", 32}, 2);
    const Tensor empty({0, 3, 224, 224});
    CHECK(bacnet::predict(g, empty).shape() == Shape{0, 32});
    CounterRng rng(4);
    const Tensor x = gradcheck::random_tensor({2, 3, 224, 224}, rng);
    CHECK(bacnet::predict(g, x) == bacnet::predict(g, x));
    CHECK(code_of([&] { bacnet::predict(g, Tensor({1, 1, 224, 224})); }) == Errc::ShapeMismatch);
    CHECK(code_of([&] { bacnet::predict(g, Tensor({3, 224, 224})); }) == Errc::ShapeMismatch);
}

TEST_CASE("build is deterministic in the seed") {
    const auto a = build_architecture({"shufflenet_v2_x0_5", 32}, 7);
    const auto b = build_architecture({"shufflenet_v2_x0_5", 32}, 7);
    const auto c = build_architecture({"shufflenet_v2_x0_5", 32}, 8);
    for (std::size_t i = 0; i < a.parameters().size(); ++i) CHECK(a.parameters()[i].value == b.parameters()[i].value);
    bool differs = false;
    for (std::size_t i = 0; i < a.parameters().size(); ++i) differs |= a.parameters()[i].value != c.parameters()[i].value;
    CHECK(differs);
}

TEST_CASE("finetune_head replaces only the head") {
    for (auto name : {"mobilenet_v2", "squeezenet1_0", "shufflenet_v2_x1_0", "mobilenet_v3_large", "efficientnet-b0"}) {
        CAPTURE(name);
        LayerGraph g = build_architecture({name, 1000}, 3);
        const LayerGraph original = g;
        finetune_head(g, 32);
        CHECK(g.num_classes() == 32);
        CHECK(g.param_count() == kReferenceCounts.at(name).first);
        const int head = find_head(g);
        std::vector<int> head_params;
        std::visit(
            [&](const auto& o) {
                if constexpr (requires { o.weight; }) head_params = {o.weight, o.bias};
            },
            g.nodes()[static_cast<std::size_t>(head)].op);
        for (std::size_t i = 0; i < g.parameters().size(); ++i) {
            if (std::find(head_params.begin(), head_params.end(), static_cast<int>(i)) != head_params.end()) continue;
            CHECK(g.parameters()[i].value == original.parameters()[i].value);
        }
        const std::size_t once = g.param_count();
        finetune_head(g, 32);
        CHECK(g.param_count() == once);
        g.validate({1, 3, 224, 224});
    }
}

TEST_CASE("width multiplier shrinks mobilenet variants") {
    const auto full = build_architecture({"mobilenet_v2", 4, 1.0});
    const auto narrow = build_architecture({"mobilenet_v2", 4, 0.25});
    CHECK(narrow.param_count() < full.param_count() / 4);
    narrow.validate({1, 3, 32, 32});
    const auto v3 = build_architecture({"mobilenet_v3_small", 4, 0.5});
    v3.validate({1, 3, 64, 64});
}

TEST_CASE("inverted residual with zero weights is the identity") {
    const InvertedResidualConfig cfg{16, 64, 16, 3, 1, Activation::ReLU6, std::nullopt};
    LayerGraph block = build_block(cfg, 1);
    for (auto& p : block.parameters())
        if (p.value.rank() == 4) p.value.fill(0.0);
    CounterRng rng(5);
    const Tensor x = gradcheck::random_tensor({2, 16, 6, 6}, rng);
    CHECK(block_forward(block, x) == x);

    // With random weights the skip still contributes: F(x) + x.
    LayerGraph live = build_block(cfg, 2);
    LayerGraph no_skip = live;
    const Tensor y = block_forward(live, x);
    no_skip.nodes().pop_back();  // drop the residual add
    const Tensor f = block_forward(no_skip, x);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(f[i] + x[i]).epsilon(1e-12));
}

TEST_CASE("block output shapes") {
    CounterRng rng(6);
    const Tensor x = gradcheck::random_tensor({1, 96, 9, 9}, rng);
    CHECK(block_forward(build_block(FireConfig{96, 16, 64, 64}), x).shape() == Shape{1, 128, 9, 9});
    CHECK(block_forward(build_block(ShuffleUnitConfig{96, 96, 1}), x).shape() == Shape{1, 96, 9, 9});
    CHECK(block_forward(build_block(ShuffleUnitConfig{96, 192, 2}), x).shape() == Shape{1, 192, 5, 5});
    const InvertedResidualConfig se{96, 240, 40, 5, 2, Activation::HardSwish, 64};
    CHECK(block_forward(build_block(se), x).shape() == Shape{1, 40, 5, 5});
    CHECK(code_of([&] { block_forward(build_block(FireConfig{32, 16, 64, 64}), x); }) == Errc::ShapeMismatch);
}
