#include "bacnet/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bacnet/error.hpp"

namespace bacnet::nn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void shape_error(const std::string& what) { throw Error(Errc::ShapeMismatch, what); }

void accumulate(Tensor& into, const Tensor& g) {
    if (into.shape().empty()) {
        into = g;
        return;
    }
    if (into.shape() != g.shape()) shape_error("gradient shape " + to_string(g.shape()) + " vs " + to_string(into.shape()));
    for (std::size_t i = 0; i < g.size(); ++i) into[i] += g[i];
}

}  // namespace

std::string op_name(const Op& o) {
    return std::visit(overloaded{
                          [](const op::Input&) { return std::string("input"); },
                          [](const op::Conv&) { return std::string("conv"); },
                          [](const op::BatchNorm&) { return std::string("batchnorm"); },
                          [](const op::Act&) { return std::string("activation"); },
                          [](const op::GlobalAvgPool&) { return std::string("global_avg_pool"); },
                          [](const op::MaxPool&) { return std::string("max_pool"); },
                          [](const op::Flatten&) { return std::string("flatten"); },
                          [](const op::Linear&) { return std::string("linear"); },
                          [](const op::Dropout&) { return std::string("dropout"); },
                          [](const op::Add&) { return std::string("add"); },
                          [](const op::Concat&) { return std::string("concat"); },
                          [](const op::Slice&) { return std::string("slice"); },
                          [](const op::ChannelShuffle&) { return std::string("channel_shuffle"); },
                          [](const op::Scale&) { return std::string("scale"); },
                      },
                      o);
}

int LayerGraph::add_input(int channels) {
    if (!nodes_.empty()) throw Error(Errc::ShapeMismatch, "input must be the first node");
    nodes_.push_back(Node{"input", op::Input{channels}, {}});
    return 0;
}

int LayerGraph::add_node(std::string name, Op o, std::vector<int> inputs) {
    const int id = static_cast<int>(nodes_.size());
    if (id == 0) throw Error(Errc::ShapeMismatch, "graph has no input node");
    for (int in : inputs) {
        if (in < 0 || in >= id) throw Error(Errc::ShapeMismatch, name + ": edge from a later node");
    }
    nodes_.push_back(Node{std::move(name), std::move(o), std::move(inputs)});
    return id;
}

int LayerGraph::add_parameter(std::string name, Tensor value) {
    params_.push_back(Parameter{std::move(name), std::move(value), Tensor()});
    return static_cast<int>(params_.size()) - 1;
}

int LayerGraph::input_channels() const {
    if (nodes_.empty()) throw Error(Errc::ShapeMismatch, "empty graph");
    return std::get<op::Input>(nodes_.front().op).channels;
}

std::size_t LayerGraph::param_count() const noexcept {
    std::size_t total = 0;
    for (const auto& p : params_) total += p.value.size();
    return total;
}

std::vector<LayerGraph::Buffer> LayerGraph::buffers() {
    std::vector<Buffer> out;
    for (auto& n : nodes_) {
        if (auto* bn = std::get_if<op::BatchNorm>(&n.op)) {
            out.push_back({n.name + ".running_mean", &bn->running_mean});
            out.push_back({n.name + ".running_var", &bn->running_var});
        }
    }
    return out;
}

void LayerGraph::zero_grad() {
    for (auto& p : params_) {
        if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
        p.grad.fill(real(0));
    }
}

// ---------------------------------------------------------------------------
// Shape inference

std::vector<Shape> LayerGraph::infer_shapes(const Shape& input_shape) const {
    if (nodes_.empty()) shape_error("empty graph");
    std::vector<Shape> shapes(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& node = nodes_[i];
        auto in = [&](std::size_t k) -> const Shape& { return shapes[static_cast<std::size_t>(node.inputs.at(k))]; };
        auto fail = [&](const std::string& why) { shape_error(node.name + " (" + op_name(node.op) + "): " + why); };
        auto need4 = [&](const Shape& s) {
            if (s.size() != 4) fail("expects NCHW input, got " + to_string(s));
        };
        shapes[i] = std::visit(
            overloaded{
                [&](const op::Input& o) -> Shape {
                    if (input_shape.size() != 4 || input_shape[1] != o.channels) {
                        fail("input " + to_string(input_shape) + " needs " + std::to_string(o.channels) + " channels");
                    }
                    return input_shape;
                },
                [&](const op::Conv& o) -> Shape {
                    const Shape& s = in(0);
                    need4(s);
                    const Shape& w = parameter(o.weight).value.shape();
                    const int groups = o.geometry.groups;
                    if (s[1] % groups != 0 || w[0] % groups != 0 || w[1] != s[1] / groups) {
                        fail("weight " + to_string(w) + " vs input " + to_string(s));
                    }
                    if (o.bias >= 0 && parameter(o.bias).value.shape() != Shape{w[0]}) fail("bias size");
                    const int ho = conv_out_size(s[2], w[2], o.geometry.stride, o.geometry.padding);
                    const int wo = conv_out_size(s[3], w[3], o.geometry.stride, o.geometry.padding);
                    if (s[2] + 2 * o.geometry.padding < w[2] || s[3] + 2 * o.geometry.padding < w[3] || ho <= 0 ||
                        wo <= 0) {
                        fail("kernel exceeds padded input " + to_string(s));
                    }
                    return {s[0], w[0], ho, wo};
                },
                [&](const op::BatchNorm& o) -> Shape {
                    const Shape& s = in(0);
                    need4(s);
                    if (parameter(o.gamma).value.shape() != Shape{s[1]}) fail("channel count");
                    return s;
                },
                [&](const op::Act&) -> Shape { return in(0); },
                [&](const op::GlobalAvgPool&) -> Shape {
                    const Shape& s = in(0);
                    need4(s);
                    return {s[0], s[1], 1, 1};
                },
                [&](const op::MaxPool& o) -> Shape {
                    const Shape& s = in(0);
                    need4(s);
                    const int ho = max_pool_out_size(s[2], o.geometry);
                    const int wo = max_pool_out_size(s[3], o.geometry);
                    if (ho <= 0 || wo <= 0) fail("window exceeds input " + to_string(s));
                    return {s[0], s[1], ho, wo};
                },
                [&](const op::Flatten&) -> Shape {
                    const Shape& s = in(0);
                    if (s.empty()) fail("rank-0 input");
                    int rest = 1;
                    for (std::size_t k = 1; k < s.size(); ++k) rest *= s[k];
                    return {s[0], rest};
                },
                [&](const op::Linear& o) -> Shape {
                    const Shape& s = in(0);
                    const Shape& w = parameter(o.weight).value.shape();
                    if (s.size() != 2 || s[1] != w[1]) fail("input " + to_string(s) + " vs weight " + to_string(w));
                    return {s[0], w[0]};
                },
                [&](const op::Dropout&) -> Shape { return in(0); },
                [&](const op::Add&) -> Shape {
                    for (std::size_t k = 1; k < node.inputs.size(); ++k) {
                        if (in(k) != in(0)) fail(to_string(in(0)) + " + " + to_string(in(k)));
                    }
                    return in(0);
                },
                [&](const op::Concat&) -> Shape {
                    Shape s = in(0);
                    need4(s);
                    for (std::size_t k = 1; k < node.inputs.size(); ++k) {
                        const Shape& t = in(k);
                        if (t.size() != 4 || t[0] != s[0] || t[2] != s[2] || t[3] != s[3]) {
                            fail(to_string(s) + " ++ " + to_string(t));
                        }
                        s[1] += t[1];
                    }
                    return s;
                },
                [&](const op::Slice& o) -> Shape {
                    Shape s = in(0);
                    need4(s);
                    if (o.begin < 0 || o.end > s[1] || o.begin >= o.end) fail("slice out of range");
                    s[1] = o.end - o.begin;
                    return s;
                },
                [&](const op::ChannelShuffle& o) -> Shape {
                    const Shape& s = in(0);
                    need4(s);
                    if (o.groups <= 0 || s[1] % o.groups != 0) {
                        throw Error(Errc::IndivisibleChannels, node.name + ": " + std::to_string(s[1]) +
                                                                   " channels into " + std::to_string(o.groups));
                    }
                    return s;
                },
                [&](const op::Scale&) -> Shape {
                    const Shape& s = in(0);
                    need4(s);
                    if (in(1) != Shape{s[0], s[1], 1, 1}) fail("gate " + to_string(in(1)));
                    return s;
                },
            },
            node.op);
    }
    return shapes;
}

void LayerGraph::validate(const Shape& input_shape) const {
    if (nodes_.empty() || !std::holds_alternative<op::Input>(nodes_.front().op)) {
        shape_error("graph must start with its input node");
    }
    std::vector<int> consumers(nodes_.size(), 0);
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (std::holds_alternative<op::Input>(nodes_[i].op)) shape_error("more than one input node");
        for (int in : nodes_[i].inputs) {
            if (in < 0 || static_cast<std::size_t>(in) >= i) shape_error(nodes_[i].name + ": not topologically ordered");
            ++consumers[static_cast<std::size_t>(in)];
        }
    }
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
        if (consumers[i] == 0) shape_error(nodes_[i].name + " is a dangling output");
    }
    const Shape out = infer_shapes(input_shape).back();
    if (out.size() != 2 || out[0] != input_shape[0]) shape_error("output shape " + to_string(out) + " is not (N, K)");
}

int LayerGraph::num_classes() const {
    const int head = find_head(*this);
    return std::visit(overloaded{
                          [&](const op::Linear& o) { return parameter(o.weight).value.dim(0); },
                          [&](const op::Conv& o) { return parameter(o.weight).value.dim(0); },
                          [](const auto&) { return 0; },
                      },
                      nodes_[static_cast<std::size_t>(head)].op);
}

// ---------------------------------------------------------------------------
// Execution

Tensor LayerGraph::infer(const Tensor& x) const {
    // Eval mode never mutates the graph, so the const_cast is sound.
    return const_cast<LayerGraph*>(this)->run(x, Mode::Eval, nullptr, nullptr, false);
}

Tensor LayerGraph::forward(const Tensor& x, Mode mode, ForwardCache& cache, CounterRng* rng) {
    return run(x, mode, &cache, rng, true);
}

Tensor LayerGraph::run(const Tensor& x, Mode mode, ForwardCache* cache, CounterRng* rng, bool keep_all) {
    const std::size_t count = nodes_.size();
    if (count == 0) shape_error("empty graph");
    std::vector<Tensor> local;
    std::vector<Tensor>& outs = cache ? cache->outputs : local;
    outs.assign(count, Tensor());
    if (cache) {
        cache->mode = mode;
        cache->batchnorm.assign(count, {});
        cache->argmax.assign(count, {});
        cache->dropout_mask.assign(count, {});
    }

    std::vector<std::size_t> last_use(count, 0);
    for (std::size_t i = 0; i < count; ++i) {
        for (int in : nodes_[i].inputs) last_use[static_cast<std::size_t>(in)] = i;
    }

    for (std::size_t i = 0; i < count; ++i) {
        Node& node = nodes_[i];
        auto in = [&](std::size_t k) -> const Tensor& { return outs[static_cast<std::size_t>(node.inputs.at(k))]; };
        outs[i] = std::visit(
            overloaded{
                [&](const op::Input& o) -> Tensor {
                    if (x.rank() != 4 || x.dim(1) != o.channels) {
                        shape_error("input " + to_string(x.shape()) + " needs " + std::to_string(o.channels) +
                                    " channels");
                    }
                    return x;
                },
                [&](const op::Conv& o) -> Tensor {
                    const Tensor* bias = o.bias >= 0 ? &parameter(o.bias).value : nullptr;
                    return conv2d_forward(in(0), parameter(o.weight).value, bias, o.geometry);
                },
                [&](op::BatchNorm& o) -> Tensor {
                    const Tensor& gamma = parameter(o.gamma).value;
                    const Tensor& beta = parameter(o.beta).value;
                    if (mode == Mode::Eval) {
                        return batchnorm_inference(in(0), gamma, beta, o.running_mean, o.running_var, o.eps);
                    }
                    BatchNormCache local_stats;
                    BatchNormCache& stats = cache ? cache->batchnorm[i] : local_stats;
                    Tensor y = batchnorm_train_forward(in(0), gamma, beta, o.eps, stats);
                    const double n = static_cast<double>(in(0).size()) / in(0).dim(1);
                    const double unbias = n > 1 ? n / (n - 1) : 1.0;
                    for (std::size_t c = 0; c < stats.mean.size(); ++c) {
                        const double var = 1.0 / (stats.inv_std[c] * stats.inv_std[c]) - o.eps;
                        o.running_mean[c] =
                            static_cast<real>((1 - o.momentum) * o.running_mean[c] + o.momentum * stats.mean[c]);
                        o.running_var[c] =
                            static_cast<real>((1 - o.momentum) * o.running_var[c] + o.momentum * var * unbias);
                    }
                    return y;
                },
                [&](const op::Act& o) -> Tensor { return activation_forward(in(0), o.kind); },
                [&](const op::GlobalAvgPool&) -> Tensor { return global_avg_pool_forward(in(0)); },
                [&](const op::MaxPool& o) -> Tensor {
                    return max_pool_forward(in(0), o.geometry, cache ? &cache->argmax[i] : nullptr);
                },
                [&](const op::Flatten&) -> Tensor {
                    const Tensor& t = in(0);
                    int rest = 1;
                    for (std::size_t k = 1; k < t.rank(); ++k) rest *= t.dim(k);
                    return t.reshaped({t.dim(0), rest});
                },
                [&](const op::Linear& o) -> Tensor {
                    const Tensor* bias = o.bias >= 0 ? &parameter(o.bias).value : nullptr;
                    return linear_forward(in(0), parameter(o.weight).value, bias);
                },
                [&](const op::Dropout& o) -> Tensor {
                    if (mode == Mode::Eval || o.p <= 0.0) return in(0);
                    if (rng == nullptr) shape_error(node.name + ": training dropout needs a generator");
                    const Tensor& t = in(0);
                    std::vector<real> mask(t.size());
                    const real keep_scale = static_cast<real>(1.0 / (1.0 - o.p));
                    for (auto& m : mask) m = rng->uniform() < o.p ? real(0) : keep_scale;
                    Tensor y(t.shape());
                    for (std::size_t k = 0; k < t.size(); ++k) y[k] = t[k] * mask[k];
                    if (cache) cache->dropout_mask[i] = std::move(mask);
                    return y;
                },
                [&](const op::Add&) -> Tensor {
                    Tensor y = in(0);
                    for (std::size_t k = 1; k < node.inputs.size(); ++k) {
                        const Tensor& t = in(k);
                        if (t.shape() != y.shape()) shape_error(node.name + ": add of mismatched shapes");
                        for (std::size_t q = 0; q < y.size(); ++q) y[q] += t[q];
                    }
                    return y;
                },
                [&](const op::Concat&) -> Tensor {
                    std::vector<const Tensor*> parts;
                    for (std::size_t k = 0; k < node.inputs.size(); ++k) parts.push_back(&in(k));
                    return concat_channels(parts);
                },
                [&](const op::Slice& o) -> Tensor { return slice_channels(in(0), o.begin, o.end); },
                [&](const op::ChannelShuffle& o) -> Tensor { return channel_shuffle(in(0), o.groups); },
                [&](const op::Scale&) -> Tensor { return scale_channels(in(0), in(1)); },
            },
            node.op);

        if (!keep_all) {
            for (int inp : node.inputs) {
                const auto j = static_cast<std::size_t>(inp);
                if (last_use[j] == i) outs[j] = Tensor();
            }
        }
    }
    return outs.back();
}

Tensor LayerGraph::backward(const ForwardCache& cache, const Tensor& grad_output) {
    const std::size_t count = nodes_.size();
    if (cache.outputs.size() != count) shape_error("forward cache does not belong to this graph");
    if (grad_output.shape() != cache.outputs.back().shape()) {
        shape_error("upstream gradient " + to_string(grad_output.shape()) + " vs output " +
                    to_string(cache.outputs.back().shape()));
    }
    std::vector<Tensor> grads(count);
    grads.back() = grad_output;

    auto param_grad = [&](int index, const Tensor& g) {
        Parameter& p = parameter(index);
        if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
        for (std::size_t k = 0; k < g.size(); ++k) p.grad[k] += g[k];
    };

    for (std::size_t i = count; i-- > 1;) {
        if (grads[i].shape().empty()) continue;  // node does not reach the output
        const Node& node = nodes_[i];
        const Tensor& g = grads[i];
        auto in = [&](std::size_t k) -> const Tensor& {
            return cache.outputs[static_cast<std::size_t>(node.inputs.at(k))];
        };
        auto send = [&](std::size_t k, const Tensor& t) { accumulate(grads[static_cast<std::size_t>(node.inputs.at(k))], t); };

        std::visit(overloaded{
                       [&](const op::Input&) {},
                       [&](const op::Conv& o) {
                           ConvGrads cg = conv2d_backward(in(0), parameter(o.weight).value, o.bias >= 0, g, o.geometry);
                           param_grad(o.weight, cg.weight);
                           if (o.bias >= 0) param_grad(o.bias, cg.bias);
                           send(0, cg.input);
                       },
                       [&](const op::BatchNorm& o) {
                           const Tensor& gamma = parameter(o.gamma).value;
                           BatchNormGrads bg = cache.mode == Mode::Train
                                                   ? batchnorm_train_backward(in(0), gamma, cache.batchnorm[i], g)
                                                   : batchnorm_inference_backward(in(0), gamma, o.running_mean,
                                                                                  o.running_var, o.eps, g);
                           param_grad(o.gamma, bg.gamma);
                           param_grad(o.beta, bg.beta);
                           send(0, bg.input);
                       },
                       [&](const op::Act& o) { send(0, activation_backward(in(0), g, o.kind)); },
                       [&](const op::GlobalAvgPool&) { send(0, global_avg_pool_backward(in(0).shape(), g)); },
                       [&](const op::MaxPool&) { send(0, max_pool_backward(in(0).shape(), cache.argmax[i], g)); },
                       [&](const op::Flatten&) { send(0, g.reshaped(in(0).shape())); },
                       [&](const op::Linear& o) {
                           LinearGrads lg = linear_backward(in(0), parameter(o.weight).value, o.bias >= 0, g);
                           param_grad(o.weight, lg.weight);
                           if (o.bias >= 0) param_grad(o.bias, lg.bias);
                           send(0, lg.input);
                       },
                       [&](const op::Dropout&) {
                           const auto& mask = cache.dropout_mask[i];
                           if (mask.empty()) {
                               send(0, g);
                               return;
                           }
                           Tensor d(g.shape());
                           for (std::size_t k = 0; k < g.size(); ++k) d[k] = g[k] * mask[k];
                           send(0, d);
                       },
                       [&](const op::Add&) {
                           for (std::size_t k = 0; k < node.inputs.size(); ++k) send(k, g);
                       },
                       [&](const op::Concat&) {
                           int offset = 0;
                           for (std::size_t k = 0; k < node.inputs.size(); ++k) {
                               const int c = in(k).dim(1);
                               send(k, slice_channels(g, offset, offset + c));
                               offset += c;
                           }
                       },
                       [&](const op::Slice& o) {
                           const Tensor& x = in(0);
                           Tensor d(x.shape());
                           const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
                           const int width = o.end - o.begin;
                           for (int n = 0; n < x.dim(0); ++n) {
                               const real* src = g.data() + static_cast<std::size_t>(n) * width * plane;
                               std::copy(src, src + static_cast<std::size_t>(width) * plane,
                                         d.data() + (static_cast<std::size_t>(n) * x.dim(1) + o.begin) * plane);
                           }
                           send(0, d);
                       },
                       [&](const op::ChannelShuffle& o) { send(0, channel_shuffle_backward(g, o.groups)); },
                       [&](const op::Scale&) {
                           const Tensor& x = in(0);
                           const Tensor& gate = in(1);
                           send(0, scale_channels(g, gate));
                           Tensor dg(gate.shape());
                           const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
                           for (std::size_t c = 0; c < gate.size(); ++c) {
                               real s = 0;
                               for (std::size_t q = 0; q < plane; ++q) s += g[c * plane + q] * x[c * plane + q];
                               dg[c] = s;
                           }
                           send(1, dg);
                       },
                   },
                   node.op);
    }
    if (grads.front().shape().empty()) return Tensor(cache.outputs.front().shape());
    return grads.front();
}

// ---------------------------------------------------------------------------
// Head surgery and initialization

int find_head(const LayerGraph& graph) {
    const auto& nodes = graph.nodes();
    int cur = graph.output();
    while (cur > 0) {
        const Node& n = nodes[static_cast<std::size_t>(cur)];
        if (std::holds_alternative<op::Linear>(n.op)) return cur;
        if (const auto* c = std::get_if<op::Conv>(&n.op)) {
            const Shape& w = graph.parameter(c->weight).value.shape();
            if (w[2] == 1 && w[3] == 1 && c->geometry.groups == 1) return cur;
            break;
        }
        const bool passthrough = std::holds_alternative<op::Flatten>(n.op) ||
                                 std::holds_alternative<op::GlobalAvgPool>(n.op) ||
                                 std::holds_alternative<op::Act>(n.op) || std::holds_alternative<op::Dropout>(n.op);
        if (!passthrough || n.inputs.size() != 1) break;
        cur = n.inputs.front();
    }
    throw Error(Errc::HeadNotFound, "no final linear or 1x1 convolution feeds the output");
}

namespace {

void uniform_fill(Tensor& t, double bound, CounterRng& rng) {
    for (auto& v : t.values()) v = static_cast<real>(rng.uniform(-bound, bound));
}

}  // namespace

void finetune_head(LayerGraph& graph, int num_classes, std::uint64_t seed) {
    if (num_classes < 2) throw Error(Errc::InvalidConfig, "num_classes must be >= 2");
    const int head = find_head(graph);
    Node& node = graph.nodes()[static_cast<std::size_t>(head)];
    auto replace = [&](int& weight, int& bias, Shape new_weight_shape, int fan_in) {
        Parameter& w = graph.parameter(weight);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        CounterRng wr(seed, fnv1a64(w.name));
        w.value = Tensor(std::move(new_weight_shape));
        w.grad = Tensor();
        uniform_fill(w.value, bound, wr);
        if (bias < 0) {
            const std::string stem = w.name.substr(0, w.name.rfind('.'));
            bias = graph.add_parameter(stem + ".bias", Tensor({num_classes}));
        }
        Parameter& b = graph.parameter(bias);
        CounterRng br(seed, fnv1a64(b.name));
        b.value = Tensor({num_classes});
        b.grad = Tensor();
        uniform_fill(b.value, bound, br);
    };
    if (auto* lin = std::get_if<op::Linear>(&node.op)) {
        const int in_features = graph.parameter(lin->weight).value.dim(1);
        replace(lin->weight, lin->bias, {num_classes, in_features}, in_features);
    } else {
        auto& conv = std::get<op::Conv>(node.op);
        const int in_channels = graph.parameter(conv.weight).value.dim(1);
        replace(conv.weight, conv.bias, {num_classes, in_channels, 1, 1}, in_channels);
    }
}

void initialize(LayerGraph& graph, std::uint64_t seed) {
    auto rng_for = [&](const Parameter& p) { return CounterRng(seed, fnv1a64(p.name)); };
    for (auto& node : graph.nodes()) {
        if (auto* c = std::get_if<op::Conv>(&node.op)) {
            Parameter& w = graph.parameter(c->weight);
            const Shape& s = w.value.shape();
            const double fan_out = static_cast<double>(s[0]) * s[2] * s[3] / c->geometry.groups;
            const double stddev = std::sqrt(2.0 / fan_out);
            CounterRng rng = rng_for(w);
            for (auto& v : w.value.values()) v = static_cast<real>(rng.normal() * stddev);
            if (c->bias >= 0) graph.parameter(c->bias).value.fill(real(0));
        } else if (auto* l = std::get_if<op::Linear>(&node.op)) {
            Parameter& w = graph.parameter(l->weight);
            CounterRng rng = rng_for(w);
            uniform_fill(w.value, 1.0 / std::sqrt(static_cast<double>(w.value.dim(1))), rng);
            if (l->bias >= 0) graph.parameter(l->bias).value.fill(real(0));
        } else if (auto* bn = std::get_if<op::BatchNorm>(&node.op)) {
            graph.parameter(bn->gamma).value.fill(real(1));
            graph.parameter(bn->beta).value.fill(real(0));
            bn->running_mean.fill(real(0));
            bn->running_var.fill(real(1));
        }
    }
}

}  // namespace bacnet::nn
