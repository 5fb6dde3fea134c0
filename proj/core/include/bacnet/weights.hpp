#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bacnet/nn/architectures.hpp"
#include "bacnet/nn/graph.hpp"

namespace bacnet {

/// STRW weight file, little-endian:
///   "STRW" | version u32 | count u32 |
///   count x (name_len u16 | name utf-8 | rank u8 | dims u32[rank] | dtype u8 | values)
/// dtype 0 is f32, the only tag defined by format version 1.
inline constexpr std::uint32_t kWeightFormatVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 0;

struct NamedTensor {
    std::string name;
    nn::Tensor value;
};

struct WeightFile {
    std::vector<NamedTensor> tensors;

    const NamedTensor* find(const std::string& name) const noexcept;
};

/// Throws CorruptWeights naming the tensor being read when the stream is
/// truncated, malformed or uses an unknown dtype.
WeightFile decode_weights(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_weights(const WeightFile& file);

WeightFile read_weights(const std::filesystem::path& path);
void write_weights(const std::filesystem::path& path, const WeightFile& file);

/// Parameters followed by batch-norm running statistics, graph order.
WeightFile export_state(nn::LayerGraph& graph);

struct LoadSummary {
    std::size_t loaded = 0;
    /// Batch-norm layers whose running statistics were absent (folded export);
    /// they are set to mean 0, var 1 - eps so evaluation is the pure affine.
    std::size_t folded_batchnorms = 0;
};

/// Copies every tensor of file into graph. Every graph parameter must be
/// present. Unknown names or missing parameters throw CorruptWeights; a
/// shape disagreement throws ShapeMismatch. Both messages name the tensor.
LoadSummary load_into_graph(nn::LayerGraph& graph, const WeightFile& file);

/// Builds spec.name with the head width found in file, then loads it.
nn::LayerGraph build_from_weights(const std::string& architecture, const WeightFile& file, double width_mult = 1.0);

}  // namespace bacnet
