#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bacnet/nn/graph.hpp"

namespace bacnet::nn {

/// The twelve supported network variants.
inline constexpr std::array<std::string_view, 12> kArchitectureNames = {
    "efficientnet-b0",    "efficientnet-b1",    "efficientnet-b2",    "mobilenet_v2",
    "mobilenet_v3_small", "mobilenet_v3_large", "shufflenet_v2_x0_5", "shufflenet_v2_x1_0",
    "shufflenet_v2_x1_5", "shufflenet_v2_x2_0", "squeezenet1_0",      "squeezenet1_1",
};

bool is_known_architecture(std::string_view name) noexcept;

struct ArchitectureSpec {
    std::string name;
    int num_classes = 1000;
    /// Channel multiplier for the MobileNet families (1.0 = published network).
    double width_mult = 1.0;
};

/// Validates name, num_classes >= 2 and width_mult > 0.
void validate(const ArchitectureSpec& spec);

struct CompoundScale {
    double alpha = 1.2;
    double beta = 1.1;
    double gamma = 1.15;
    double phi = 0.0;
};

struct ScaleFactors {
    double depth;
    double width;
    double resolution;
};

/// depth = alpha^phi, width = beta^phi, resolution = gamma^phi.
ScaleFactors compound_scale(const CompoundScale& cs);

/// Builds the published topology with a num_classes head. Parameter and
/// buffer names follow the torchvision state_dict layout of each model
/// (e.g. "features.1.conv.0.0.weight"), which is also the naming scheme of
/// weight files. Weights are initialized deterministically from seed.
/// Throws UnknownArchitecture.
LayerGraph build_architecture(const ArchitectureSpec& spec, std::uint64_t seed = 0);

/// EfficientNet-B0 topology stretched by explicit depth/width factors. B1 and
/// B2 use the published factor pairs (1.0, 1.1) and (1.1, 1.2); any other
/// pair, e.g. from compound_scale, yields an intermediate family member.
LayerGraph build_efficientnet(double width_factor, double depth_factor, int num_classes, double dropout,
                              std::uint64_t seed = 0);

/// One row of the MobileNetV2 inverted-residual table: expansion t, output
/// channels c, repeats n, first stride s.
struct InvertedResidualSetting {
    int expand_ratio;
    int channels;
    int repeats;
    int stride;
};

struct MobileNetV2Config {
    int num_classes = 1000;
    double width_mult = 1.0;
    std::vector<InvertedResidualSetting> settings;  // empty: published table
    int first_channels = 32;
    int last_channels = 1280;
    double dropout = 0.2;
};

LayerGraph build_mobilenet_v2(const MobileNetV2Config& cfg, std::uint64_t seed = 0);

/// torchvision's channel rounding: nearest multiple of divisor, never more
/// than 10% below v.
int make_divisible(double v, int divisor = 8);

// ---------------------------------------------------------------------------
// Stand-alone blocks

enum class ResidualNaming { MobileNetV2, Block };

struct InvertedResidualConfig {
    int in_channels;
    int expanded_channels;
    int out_channels;
    int kernel = 3;
    int stride = 1;
    Activation activation = Activation::ReLU6;
    /// Squeeze-excite bottleneck width; nullopt disables the gate.
    std::optional<int> se_channels;
    Activation se_inner = Activation::ReLU;
    Activation se_gate = Activation::HardSigmoid;
    ResidualNaming naming = ResidualNaming::Block;
};

struct FireConfig {
    int in_channels;
    int squeeze;
    int expand1x1;
    int expand3x3;
};

struct ShuffleUnitConfig {
    int in_channels;
    int out_channels;
    int stride = 1;
};

using BlockConfig = std::variant<InvertedResidualConfig, FireConfig, ShuffleUnitConfig>;

/// Graph holding a single block (input -> block output), parameters
/// initialized from seed.
LayerGraph build_block(const BlockConfig& cfg, std::uint64_t seed = 0);

/// Evaluation-mode forward through a block graph built by build_block.
Tensor block_forward(const LayerGraph& block, const Tensor& x);

}  // namespace bacnet::nn
