#pragma once

// Stateless forward/backward kernels. Every backward takes the forward inputs
// (and where needed the forward output) plus the upstream gradient.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bacnet/nn/tensor.hpp"

namespace bacnet::nn {

struct ConvGeometry {
    int stride = 1;
    int padding = 0;
    int groups = 1;
};

/// Output spatial size floor((in + 2p - k) / s) + 1.
int conv_out_size(int in, int kernel, int stride, int padding) noexcept;

/// Grouped 2-D cross-correlation. x: (N,Cin,H,W), weight: (Cout, Cin/groups, kh, kw),
/// bias: (Cout) or empty.
Tensor conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor* bias, ConvGeometry g);

struct ConvGrads {
    Tensor input;
    Tensor weight;
    Tensor bias;  // empty when the layer has no bias
};

ConvGrads conv2d_backward(const Tensor& x, const Tensor& weight, bool has_bias, const Tensor& grad_out,
                          ConvGeometry g);

/// Per-channel convolution, weight (C, 1, kh, kw).
Tensor depthwise_conv2d_forward(const Tensor& x, const Tensor& weight, int stride, int padding);

// Batch normalization -------------------------------------------------------

Tensor batchnorm_inference(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& running_mean,
                           const Tensor& running_var, double eps);

struct BatchNormCache {
    std::vector<double> mean;
    std::vector<double> inv_std;
};

/// Normalizes with batch statistics (biased variance) and returns the cache
/// needed by the backward pass.
Tensor batchnorm_train_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                               BatchNormCache& cache);

struct BatchNormGrads {
    Tensor input;
    Tensor gamma;
    Tensor beta;
};

BatchNormGrads batchnorm_train_backward(const Tensor& x, const Tensor& gamma, const BatchNormCache& cache,
                                        const Tensor& grad_out);
BatchNormGrads batchnorm_inference_backward(const Tensor& x, const Tensor& gamma, const Tensor& running_mean,
                                            const Tensor& running_var, double eps, const Tensor& grad_out);

// Pointwise activations ------------------------------------------------------

enum class Activation { ReLU, ReLU6, HardSwish, HardSigmoid, SiLU, Sigmoid };

real activate(real v, Activation kind) noexcept;
real activate_derivative(real v, Activation kind) noexcept;
Tensor activation_forward(const Tensor& x, Activation kind);
Tensor activation_backward(const Tensor& x, const Tensor& grad_out, Activation kind);

// Pooling, linear, reshaping ------------------------------------------------

/// (N,C,H,W) -> (N,C,1,1)
Tensor global_avg_pool_forward(const Tensor& x);
Tensor global_avg_pool_backward(const Shape& input_shape, const Tensor& grad_out);

struct MaxPoolGeometry {
    int kernel = 3;
    int stride = 2;
    int padding = 0;
    bool ceil_mode = false;
};

int max_pool_out_size(int in, const MaxPoolGeometry& g) noexcept;
/// argmax receives, per output element, the flat input index of the winner.
Tensor max_pool_forward(const Tensor& x, const MaxPoolGeometry& g, std::vector<std::size_t>* argmax = nullptr);
Tensor max_pool_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax, const Tensor& grad_out);

/// x: (N, in), weight: (out, in), bias: (out) or null.
Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor* bias);

struct LinearGrads {
    Tensor input;
    Tensor weight;
    Tensor bias;
};

LinearGrads linear_backward(const Tensor& x, const Tensor& weight, bool has_bias, const Tensor& grad_out);

/// Row-wise softmax over the last dimension of an (N, K) tensor.
Tensor softmax(const Tensor& logits);

/// Reshape channels to (groups, C/groups), transpose, flatten.
Tensor channel_shuffle(const Tensor& x, int groups);
/// Adjoint of channel_shuffle(groups), i.e. channel_shuffle(C / groups).
Tensor channel_shuffle_backward(const Tensor& grad_out, int groups);

Tensor concat_channels(std::span<const Tensor* const> parts);
Tensor slice_channels(const Tensor& x, int begin, int end);

/// x (N,C,H,W) scaled by gate (N,C,1,1).
Tensor scale_channels(const Tensor& x, const Tensor& gate);

// Dense matrix product helpers (row-major) ----------------------------------

/// C[m x n] (+)= A[m x k] * B[k x n]
void gemm_nn(int m, int n, int k, const real* a, const real* b, real* c, bool accumulate);
/// C[m x n] (+)= A[m x k] * B[n x k]^T
void gemm_nt(int m, int n, int k, const real* a, const real* b, real* c, bool accumulate);
/// C[m x n] (+)= A[k x m]^T * B[k x n]
void gemm_tn(int m, int n, int k, const real* a, const real* b, real* c, bool accumulate);

}  // namespace bacnet::nn
