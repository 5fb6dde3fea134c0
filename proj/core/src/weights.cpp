#include "bacnet/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <set>

#include "bacnet/error.hpp"
#include "bacnet/raster.hpp"

namespace bacnet {

static_assert(std::endian::native == std::endian::little, "STRW IO assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'S', 'T', 'R', 'W'};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename T>
    T read(const std::string& what) {
        T v{};
        take(&v, sizeof(T), what);
        return v;
    }

    void take(void* dst, std::size_t n, const std::string& what) {
        if (bytes_.size() - pos_ < n) throw Error(Errc::CorruptWeights, "truncated while reading " + what);
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    bool done() const noexcept { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

// torchvision bookkeeping counter with no runtime meaning here.
bool ignorable(const std::string& name) {
    constexpr std::string_view suffix = ".num_batches_tracked";
    return name.size() > suffix.size() && name.ends_with(suffix);
}

}  // namespace

const NamedTensor* WeightFile::find(const std::string& name) const noexcept {
    for (const auto& t : tensors) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

WeightFile decode_weights(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    char magic[4];
    r.take(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw Error(Errc::CorruptWeights, "bad magic, not an STRW file");
    const auto version = r.read<std::uint32_t>("version");
    if (version != kWeightFormatVersion) {
        throw Error(Errc::CorruptWeights, "unsupported format version " + std::to_string(version));
    }
    const auto count = r.read<std::uint32_t>("tensor count");

    WeightFile file;
    std::set<std::string> seen;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string where = "tensor #" + std::to_string(i);
        const auto len = r.read<std::uint16_t>(where + " name length");
        std::string name(len, '\0');
        r.take(name.data(), len, where + " name");
        if (name.empty()) throw Error(Errc::CorruptWeights, where + " has an empty name");
        if (!seen.insert(name).second) throw Error(Errc::CorruptWeights, "duplicate tensor '" + name + "'");

        const std::string label = "tensor '" + name + "'";
        const auto rank = r.read<std::uint8_t>(label + " rank");
        nn::Shape shape(rank);
        std::uint64_t elements = 1;
        for (auto& d : shape) {
            const auto dim = r.read<std::uint32_t>(label + " dims");
            if (dim > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
                throw Error(Errc::CorruptWeights, label + " dimension out of range");
            }
            d = static_cast<int>(dim);
            elements *= dim;
        }
        const auto dtype = r.read<std::uint8_t>(label + " dtype");
        if (dtype != kDtypeF32) throw Error(Errc::CorruptWeights, label + " has unknown dtype " + std::to_string(dtype));
        if (elements > bytes.size()) throw Error(Errc::CorruptWeights, "truncated while reading " + label + " values");

        std::vector<float> raw(static_cast<std::size_t>(elements));
        r.take(raw.data(), raw.size() * sizeof(float), label + " values");
        std::vector<nn::real> values(raw.begin(), raw.end());
        file.tensors.push_back({std::move(name), nn::Tensor(std::move(shape), std::move(values))});
    }
    if (!r.done()) throw Error(Errc::CorruptWeights, "trailing bytes after " + std::to_string(count) + " tensors");
    return file;
}

std::vector<std::uint8_t> encode_weights(const WeightFile& file) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put(out, kWeightFormatVersion);
    put(out, static_cast<std::uint32_t>(file.tensors.size()));
    for (const auto& t : file.tensors) {
        if (t.name.size() > 0xFFFF) throw Error(Errc::InvalidConfig, "tensor name too long: " + t.name);
        if (t.value.rank() > 0xFF) throw Error(Errc::InvalidConfig, "tensor rank too large: " + t.name);
        put(out, static_cast<std::uint16_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        put(out, static_cast<std::uint8_t>(t.value.rank()));
        for (int d : t.value.shape()) put(out, static_cast<std::uint32_t>(d));
        put(out, kDtypeF32);
        for (nn::real v : t.value.values()) put(out, static_cast<float>(v));
    }
    return out;
}

WeightFile read_weights(const std::filesystem::path& path) {
    const auto bytes = raster::read_file(path);
    try {
        return decode_weights(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_weights(const std::filesystem::path& path, const WeightFile& file) {
    raster::write_file(path, encode_weights(file));
}

WeightFile export_state(nn::LayerGraph& graph) {
    WeightFile file;
    for (const auto& p : graph.parameters()) file.tensors.push_back({p.name, p.value});
    for (const auto& b : graph.buffers()) file.tensors.push_back({b.name, *b.value});
    return file;
}

LoadSummary load_into_graph(nn::LayerGraph& graph, const WeightFile& file) {
    std::map<std::string, nn::Tensor*> slots;
    for (auto& p : graph.parameters()) slots[p.name] = &p.value;
    for (const auto& b : graph.buffers()) slots[b.name] = b.value;

    LoadSummary summary;
    std::set<std::string> filled;
    for (const auto& t : file.tensors) {
        if (ignorable(t.name)) continue;
        const auto it = slots.find(t.name);
        if (it == slots.end()) throw Error(Errc::CorruptWeights, "unexpected tensor '" + t.name + "'");
        if (it->second->shape() != t.value.shape()) {
            throw Error(Errc::ShapeMismatch, "tensor '" + t.name + "' is " + nn::to_string(t.value.shape()) +
                                                 ", model expects " + nn::to_string(it->second->shape()));
        }
        *it->second = t.value;
        filled.insert(t.name);
        ++summary.loaded;
    }
    for (const auto& p : graph.parameters()) {
        if (!filled.contains(p.name)) throw Error(Errc::CorruptWeights, "missing tensor '" + p.name + "'");
    }
    for (auto& node : graph.nodes()) {
        auto* bn = std::get_if<nn::op::BatchNorm>(&node.op);
        if (!bn) continue;
        const bool has_mean = filled.contains(node.name + ".running_mean");
        const bool has_var = filled.contains(node.name + ".running_var");
        if (has_mean != has_var) {
            throw Error(Errc::CorruptWeights, "missing tensor '" + node.name + (has_mean ? ".running_var'" : ".running_mean'"));
        }
        if (!has_mean) {
            bn->running_mean.fill(0);
            bn->running_var.fill(static_cast<nn::real>(1.0 - bn->eps));
            ++summary.folded_batchnorms;
        }
    }
    return summary;
}

nn::LayerGraph build_from_weights(const std::string& architecture, const WeightFile& file, double width_mult) {
    // Probe the head name with a throwaway 2-class build, then size it from the file.
    const auto probe = nn::build_architecture({architecture, 2, width_mult});
    const auto head = nn::find_head(probe);
    const auto& head_node = probe.nodes()[static_cast<std::size_t>(head)];
    const int weight = std::visit(
        [](const auto& o) -> int {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, nn::op::Linear> || std::is_same_v<T, nn::op::Conv>) return o.weight;
            return -1;
        },
        head_node.op);
    const std::string& head_name = probe.parameter(weight).name;
    const auto* t = file.find(head_name);
    if (!t || t->value.rank() == 0) throw Error(Errc::CorruptWeights, "missing tensor '" + head_name + "'");

    auto graph = nn::build_architecture({architecture, t->value.dim(0), width_mult});
    load_into_graph(graph, file);
    return graph;
}

}  // namespace bacnet
