#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bacnet/nn/ops.hpp"
#include "bacnet/nn/tensor.hpp"
#include "bacnet/rng.hpp"

namespace bacnet::nn {

/// Trainable tensor plus its accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
};

namespace op {

struct Input {
    int channels = 3;
};
struct Conv {
    ConvGeometry geometry;
    int weight = -1;
    int bias = -1;  // -1: no bias
};
struct BatchNorm {
    int gamma = -1;
    int beta = -1;
    Tensor running_mean;
    Tensor running_var;
    double eps = 1e-5;
    double momentum = 0.1;
};
struct Act {
    Activation kind = Activation::ReLU;
};
struct GlobalAvgPool {};
struct MaxPool {
    MaxPoolGeometry geometry;
};
struct Flatten {};
struct Linear {
    int weight = -1;
    int bias = -1;
};
struct Dropout {
    double p = 0.0;
};
struct Add {};
struct Concat {};
struct Slice {
    int begin = 0;
    int end = 0;
};
struct ChannelShuffle {
    int groups = 2;
};
/// inputs[0] (N,C,H,W) times gate inputs[1] (N,C,1,1).
struct Scale {};

}  // namespace op

using Op = std::variant<op::Input, op::Conv, op::BatchNorm, op::Act, op::GlobalAvgPool, op::MaxPool, op::Flatten,
                        op::Linear, op::Dropout, op::Add, op::Concat, op::Slice, op::ChannelShuffle, op::Scale>;

std::string op_name(const Op& o);

struct Node {
    std::string name;
    Op op;
    std::vector<int> inputs;
};

enum class Mode { Eval, Train };

/// Per-node state recorded by a forward pass and consumed by backward().
struct ForwardCache {
    Mode mode = Mode::Eval;
    std::vector<Tensor> outputs;
    std::vector<BatchNormCache> batchnorm;
    std::vector<std::vector<std::size_t>> argmax;
    std::vector<std::vector<real>> dropout_mask;
};

/// Feed-forward DAG of layers in topological order. Node 0 is the input; the
/// last node is the output. Parameters live in the graph and are referenced
/// from ops by index, so the head can be swapped without touching the rest.
class LayerGraph {
public:
    LayerGraph() = default;

    int add_input(int channels);
    int add_node(std::string name, Op op, std::vector<int> inputs);
    int add_parameter(std::string name, Tensor value);

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    std::vector<Node>& nodes() noexcept { return nodes_; }
    const std::vector<Parameter>& parameters() const noexcept { return params_; }
    std::vector<Parameter>& parameters() noexcept { return params_; }
    Parameter& parameter(int index) { return params_.at(static_cast<std::size_t>(index)); }
    const Parameter& parameter(int index) const { return params_.at(static_cast<std::size_t>(index)); }
    int output() const noexcept { return static_cast<int>(nodes_.size()) - 1; }
    int input_channels() const;

    /// Weights + biases + batch-norm affine terms; running statistics excluded.
    std::size_t param_count() const noexcept;

    /// Static shape of every node for the given input shape. Throws
    /// ShapeMismatch at the first inconsistent edge.
    std::vector<Shape> infer_shapes(const Shape& input_shape) const;

    /// Checks acyclicity, single input/output, and that shape inference from
    /// input_shape ends at (N, num_classes).
    void validate(const Shape& input_shape) const;
    int num_classes() const;

    /// Evaluation-mode forward pass; safe to call concurrently.
    Tensor infer(const Tensor& x) const;

    /// Forward pass that records what backward() needs. In Train mode batch
    /// norm uses batch statistics and updates its running buffers, and
    /// dropout draws masks from rng (required when any dropout has p > 0).
    Tensor forward(const Tensor& x, Mode mode, ForwardCache& cache, CounterRng* rng = nullptr);

    /// Reverse-mode pass for the cached forward; parameter gradients are
    /// accumulated into Parameter::grad. Returns the gradient wrt the input.
    Tensor backward(const ForwardCache& cache, const Tensor& grad_output);

    void zero_grad();

    /// Named non-trainable state (batch-norm running statistics).
    struct Buffer {
        std::string name;
        Tensor* value;
    };
    std::vector<Buffer> buffers();

private:
    Tensor run(const Tensor& x, Mode mode, ForwardCache* cache, CounterRng* rng, bool keep_all);

    std::vector<Node> nodes_;
    std::vector<Parameter> params_;
};

/// Index of the classification head: the last Linear, or a 1x1 Conv, reached
/// from the output through parameter-free nodes only. Throws HeadNotFound.
int find_head(const LayerGraph& graph);

/// Replaces the head with a freshly initialized layer of num_classes outputs
/// (uniform, bound 1/sqrt(fan_in), bias included). Other parameters untouched.
void finetune_head(LayerGraph& graph, int num_classes, std::uint64_t seed = 0x5eed);

/// Default initialization: conv weights N(0, 2/fan_out), linear weights
/// U(+-1/sqrt(fan_in)), biases 0, batch-norm gamma 1 / beta 0. Each tensor's
/// stream is keyed by its name so the result is independent of build order.
void initialize(LayerGraph& graph, std::uint64_t seed);

}  // namespace bacnet::nn
