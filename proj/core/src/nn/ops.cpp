#include "bacnet/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bacnet/error.hpp"

namespace bacnet::nn {

namespace {

[[noreturn]] void shape_error(const std::string& what) { throw Error(Errc::ShapeMismatch, what); }

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        shape_error(std::string(what) + " expects rank " + std::to_string(rank) + ", got " + to_string(t.shape()));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// GEMM

void gemm_nn(int m, int n, int k, const real* __restrict a, const real* __restrict b, real* __restrict c,
             bool accumulate) {
    const auto N = static_cast<std::size_t>(n);
    if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * N, real(0));
    constexpr int kBlock = 256;
    for (int k0 = 0; k0 < k; k0 += kBlock) {
        const int k1 = std::min(k, k0 + kBlock);
        for (int i = 0; i < m; ++i) {
            real* crow = c + static_cast<std::size_t>(i) * N;
            const real* arow = a + static_cast<std::size_t>(i) * static_cast<std::size_t>(k);
            for (int p = k0; p < k1; ++p) {
                const real av = arow[p];
                if (av == real(0)) continue;
                const real* brow = b + static_cast<std::size_t>(p) * N;
                for (std::size_t j = 0; j < N; ++j) crow[j] += av * brow[j];
            }
        }
    }
}

void gemm_nt(int m, int n, int k, const real* a, const real* b, real* c, bool accumulate) {
    // Transpose B once so the inner loop streams contiguously.
    std::vector<real> bt(static_cast<std::size_t>(k) * static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const real* brow = b + static_cast<std::size_t>(j) * static_cast<std::size_t>(k);
        for (int p = 0; p < k; ++p) bt[static_cast<std::size_t>(p) * n + j] = brow[p];
    }
    gemm_nn(m, n, k, a, bt.data(), c, accumulate);
}

void gemm_tn(int m, int n, int k, const real* __restrict a, const real* __restrict b, real* __restrict c,
             bool accumulate) {
    const auto N = static_cast<std::size_t>(n);
    const auto M = static_cast<std::size_t>(m);
    if (!accumulate) std::fill(c, c + M * N, real(0));
    for (int p = 0; p < k; ++p) {
        const real* arow = a + static_cast<std::size_t>(p) * M;
        const real* brow = b + static_cast<std::size_t>(p) * N;
        for (std::size_t i = 0; i < M; ++i) {
            const real av = arow[i];
            if (av == real(0)) continue;
            real* crow = c + i * N;
            for (std::size_t j = 0; j < N; ++j) crow[j] += av * brow[j];
        }
    }
}

// ---------------------------------------------------------------------------
// Convolution

int conv_out_size(int in, int kernel, int stride, int padding) noexcept {
    return (in + 2 * padding - kernel) / stride + 1;
}

namespace {

struct ConvDims {
    int n, cin, h, w, cout, cig, cog, kh, kw, ho, wo;
};

ConvDims conv_dims(const Tensor& x, const Tensor& weight, ConvGeometry g) {
    require_rank(x, 4, "conv2d input");
    require_rank(weight, 4, "conv2d weight");
    if (g.groups <= 0 || g.stride <= 0 || g.padding < 0) shape_error("invalid conv geometry");
    ConvDims d{};
    d.n = x.dim(0);
    d.cin = x.dim(1);
    d.h = x.dim(2);
    d.w = x.dim(3);
    d.cout = weight.dim(0);
    d.cig = weight.dim(1);
    d.kh = weight.dim(2);
    d.kw = weight.dim(3);
    if (d.cin % g.groups != 0 || d.cout % g.groups != 0 || d.cig != d.cin / g.groups) {
        shape_error("conv2d input " + to_string(x.shape()) + " incompatible with weight " +
                    to_string(weight.shape()) + " at groups=" + std::to_string(g.groups));
    }
    d.cog = d.cout / g.groups;
    d.ho = conv_out_size(d.h, d.kh, g.stride, g.padding);
    d.wo = conv_out_size(d.w, d.kw, g.stride, g.padding);
    if (d.h + 2 * g.padding < d.kh || d.w + 2 * g.padding < d.kw || d.ho <= 0 || d.wo <= 0) {
        shape_error("conv2d kernel larger than padded input " + to_string(x.shape()));
    }
    return d;
}

bool is_pointwise(const ConvDims& d, ConvGeometry g) {
    return d.kh == 1 && d.kw == 1 && g.stride == 1 && g.padding == 0;
}

bool is_depthwise(const ConvDims& d, ConvGeometry g) { return g.groups == d.cin && d.cout == d.cin && d.cig == 1; }

// col: (cig*kh*kw) x (ho*wo) for channels [c0, c0 + cig) of image `img` (C,H,W).
void im2col(const real* img, const ConvDims& d, ConvGeometry g, int c0, real* col) {
    const std::size_t plane = static_cast<std::size_t>(d.ho) * d.wo;
    for (int c = 0; c < d.cig; ++c) {
        const real* src = img + static_cast<std::size_t>(c0 + c) * d.h * d.w;
        for (int ki = 0; ki < d.kh; ++ki) {
            for (int kj = 0; kj < d.kw; ++kj) {
                real* dst = col + (static_cast<std::size_t>(c * d.kh + ki) * d.kw + kj) * plane;
                for (int oh = 0; oh < d.ho; ++oh) {
                    const int ih = oh * g.stride - g.padding + ki;
                    real* drow = dst + static_cast<std::size_t>(oh) * d.wo;
                    if (ih < 0 || ih >= d.h) {
                        std::fill(drow, drow + d.wo, real(0));
                        continue;
                    }
                    const real* srow = src + static_cast<std::size_t>(ih) * d.w;
                    for (int ow = 0; ow < d.wo; ++ow) {
                        const int iw = ow * g.stride - g.padding + kj;
                        drow[ow] = (iw >= 0 && iw < d.w) ? srow[iw] : real(0);
                    }
                }
            }
        }
    }
}

void col2im(const real* col, const ConvDims& d, ConvGeometry g, int c0, real* img) {
    const std::size_t plane = static_cast<std::size_t>(d.ho) * d.wo;
    for (int c = 0; c < d.cig; ++c) {
        real* dst = img + static_cast<std::size_t>(c0 + c) * d.h * d.w;
        for (int ki = 0; ki < d.kh; ++ki) {
            for (int kj = 0; kj < d.kw; ++kj) {
                const real* src = col + (static_cast<std::size_t>(c * d.kh + ki) * d.kw + kj) * plane;
                for (int oh = 0; oh < d.ho; ++oh) {
                    const int ih = oh * g.stride - g.padding + ki;
                    if (ih < 0 || ih >= d.h) continue;
                    const real* srow = src + static_cast<std::size_t>(oh) * d.wo;
                    real* drow = dst + static_cast<std::size_t>(ih) * d.w;
                    for (int ow = 0; ow < d.wo; ++ow) {
                        const int iw = ow * g.stride - g.padding + kj;
                        if (iw >= 0 && iw < d.w) drow[iw] += srow[ow];
                    }
                }
            }
        }
    }
}

// Valid output range [lo, hi) along one axis for kernel offset k.
void valid_range(int out, int in, int stride, int padding, int k, int& lo, int& hi) {
    // need 0 <= o*s - p + k < in
    lo = std::max(0, (padding - k + stride - 1) / stride);
    hi = std::min(out, (in + padding - k + stride - 1) / stride);
    if (padding - k < 0) lo = 0;
    if (hi < lo) hi = lo;
}

void depthwise_forward_into(const Tensor& x, const Tensor& weight, const ConvDims& d, ConvGeometry g, Tensor& out) {
    for (int n = 0; n < d.n; ++n) {
        for (int c = 0; c < d.cin; ++c) {
            const real* src = x.data() + (static_cast<std::size_t>(n) * d.cin + c) * d.h * d.w;
            real* dst = out.data() + (static_cast<std::size_t>(n) * d.cout + c) * d.ho * d.wo;
            const real* k = weight.data() + static_cast<std::size_t>(c) * d.kh * d.kw;
            std::fill(dst, dst + static_cast<std::size_t>(d.ho) * d.wo, real(0));
            for (int ki = 0; ki < d.kh; ++ki) {
                int oh0 = 0;
                int oh1 = 0;
                valid_range(d.ho, d.h, g.stride, g.padding, ki, oh0, oh1);
                for (int kj = 0; kj < d.kw; ++kj) {
                    const real kv = k[ki * d.kw + kj];
                    int ow0 = 0;
                    int ow1 = 0;
                    valid_range(d.wo, d.w, g.stride, g.padding, kj, ow0, ow1);
                    for (int oh = oh0; oh < oh1; ++oh) {
                        const real* srow = src + static_cast<std::size_t>(oh * g.stride - g.padding + ki) * d.w;
                        real* drow = dst + static_cast<std::size_t>(oh) * d.wo;
                        const int base = kj - g.padding;
                        if (g.stride == 1) {
                            for (int ow = ow0; ow < ow1; ++ow) drow[ow] += kv * srow[ow + base];
                        } else {
                            for (int ow = ow0; ow < ow1; ++ow) drow[ow] += kv * srow[ow * g.stride + base];
                        }
                    }
                }
            }
        }
    }
}

void add_bias(Tensor& out, const Tensor& bias) {
    const int n = out.dim(0);
    const int c = out.dim(1);
    const std::size_t plane = static_cast<std::size_t>(out.dim(2)) * out.dim(3);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < c; ++j) {
            real* p = out.data() + (static_cast<std::size_t>(i) * c + j) * plane;
            const real b = bias[static_cast<std::size_t>(j)];
            for (std::size_t q = 0; q < plane; ++q) p[q] += b;
        }
    }
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor* bias, ConvGeometry g) {
    const ConvDims d = conv_dims(x, weight, g);
    if (bias != nullptr && !bias->empty() && (bias->rank() != 1 || bias->dim(0) != d.cout)) {
        shape_error("conv2d bias " + to_string(bias->shape()) + " for " + std::to_string(d.cout) + " outputs");
    }
    Tensor out({d.n, d.cout, d.ho, d.wo});
    if (is_depthwise(d, g)) {
        depthwise_forward_into(x, weight, d, g, out);
    } else {
        const int kdim = d.cig * d.kh * d.kw;
        const std::size_t plane = static_cast<std::size_t>(d.ho) * d.wo;
        const bool pointwise = is_pointwise(d, g);
        std::vector<real> col(pointwise ? 0 : static_cast<std::size_t>(kdim) * plane);
        for (int n = 0; n < d.n; ++n) {
            const real* img = x.data() + static_cast<std::size_t>(n) * d.cin * d.h * d.w;
            for (int grp = 0; grp < g.groups; ++grp) {
                const real* b = nullptr;
                if (pointwise) {
                    b = img + static_cast<std::size_t>(grp) * d.cig * plane;
                } else {
                    im2col(img, d, g, grp * d.cig, col.data());
                    b = col.data();
                }
                const real* a = weight.data() + static_cast<std::size_t>(grp) * d.cog * kdim;
                real* c = out.data() + (static_cast<std::size_t>(n) * d.cout + static_cast<std::size_t>(grp) * d.cog) *
                                           plane;
                gemm_nn(d.cog, static_cast<int>(plane), kdim, a, b, c, false);
            }
        }
    }
    if (bias != nullptr && !bias->empty()) add_bias(out, *bias);
    return out;
}

Tensor depthwise_conv2d_forward(const Tensor& x, const Tensor& weight, int stride, int padding) {
    require_rank(x, 4, "depthwise conv input");
    if (weight.rank() != 4 || weight.dim(0) != x.dim(1) || weight.dim(1) != 1) {
        shape_error("depthwise weight " + to_string(weight.shape()) + " for input " + to_string(x.shape()));
    }
    return conv2d_forward(x, weight, nullptr, ConvGeometry{stride, padding, x.dim(1)});
}

ConvGrads conv2d_backward(const Tensor& x, const Tensor& weight, bool has_bias, const Tensor& grad_out,
                          ConvGeometry g) {
    const ConvDims d = conv_dims(x, weight, g);
    if (grad_out.shape() != Shape{d.n, d.cout, d.ho, d.wo}) {
        shape_error("conv2d grad " + to_string(grad_out.shape()) + " does not match output shape");
    }
    ConvGrads grads{Tensor(x.shape()), Tensor(weight.shape()), has_bias ? Tensor({d.cout}) : Tensor()};
    const std::size_t plane = static_cast<std::size_t>(d.ho) * d.wo;

    if (has_bias) {
        for (int n = 0; n < d.n; ++n) {
            for (int c = 0; c < d.cout; ++c) {
                const real* p = grad_out.data() + (static_cast<std::size_t>(n) * d.cout + c) * plane;
                real s = 0;
                for (std::size_t q = 0; q < plane; ++q) s += p[q];
                grads.bias[static_cast<std::size_t>(c)] += s;
            }
        }
    }

    if (is_depthwise(d, g)) {
        for (int n = 0; n < d.n; ++n) {
            for (int c = 0; c < d.cin; ++c) {
                const real* src = x.data() + (static_cast<std::size_t>(n) * d.cin + c) * d.h * d.w;
                real* gsrc = grads.input.data() + (static_cast<std::size_t>(n) * d.cin + c) * d.h * d.w;
                const real* go = grad_out.data() + (static_cast<std::size_t>(n) * d.cout + c) * plane;
                const real* k = weight.data() + static_cast<std::size_t>(c) * d.kh * d.kw;
                real* gk = grads.weight.data() + static_cast<std::size_t>(c) * d.kh * d.kw;
                for (int ki = 0; ki < d.kh; ++ki) {
                    int oh0 = 0;
                    int oh1 = 0;
                    valid_range(d.ho, d.h, g.stride, g.padding, ki, oh0, oh1);
                    for (int kj = 0; kj < d.kw; ++kj) {
                        int ow0 = 0;
                        int ow1 = 0;
                        valid_range(d.wo, d.w, g.stride, g.padding, kj, ow0, ow1);
                        const real kv = k[ki * d.kw + kj];
                        real acc = 0;
                        for (int oh = oh0; oh < oh1; ++oh) {
                            const std::size_t row = static_cast<std::size_t>(oh * g.stride - g.padding + ki) * d.w;
                            const real* grow = go + static_cast<std::size_t>(oh) * d.wo;
                            for (int ow = ow0; ow < ow1; ++ow) {
                                const std::size_t idx = row + static_cast<std::size_t>(ow * g.stride - g.padding + kj);
                                acc += grow[ow] * src[idx];
                                gsrc[idx] += grow[ow] * kv;
                            }
                        }
                        gk[ki * d.kw + kj] += acc;
                    }
                }
            }
        }
        return grads;
    }

    const int kdim = d.cig * d.kh * d.kw;
    const bool pointwise = is_pointwise(d, g);
    std::vector<real> col(static_cast<std::size_t>(kdim) * plane);
    std::vector<real> gcol(static_cast<std::size_t>(kdim) * plane);
    for (int n = 0; n < d.n; ++n) {
        const real* img = x.data() + static_cast<std::size_t>(n) * d.cin * d.h * d.w;
        real* gimg = grads.input.data() + static_cast<std::size_t>(n) * d.cin * d.h * d.w;
        for (int grp = 0; grp < g.groups; ++grp) {
            const real* go =
                grad_out.data() + (static_cast<std::size_t>(n) * d.cout + static_cast<std::size_t>(grp) * d.cog) * plane;
            const real* w = weight.data() + static_cast<std::size_t>(grp) * d.cog * kdim;
            real* gw = grads.weight.data() + static_cast<std::size_t>(grp) * d.cog * kdim;
            const real* b = nullptr;
            if (pointwise) {
                b = img + static_cast<std::size_t>(grp) * d.cig * plane;
            } else {
                im2col(img, d, g, grp * d.cig, col.data());
                b = col.data();
            }
            gemm_nt(d.cog, kdim, static_cast<int>(plane), go, b, gw, true);
            if (pointwise) {
                gemm_tn(kdim, static_cast<int>(plane), d.cog, w, go,
                        gimg + static_cast<std::size_t>(grp) * d.cig * plane, true);
            } else {
                gemm_tn(kdim, static_cast<int>(plane), d.cog, w, go, gcol.data(), false);
                col2im(gcol.data(), d, g, grp * d.cig, gimg);
            }
        }
    }
    return grads;
}

// ---------------------------------------------------------------------------
// Batch normalization

namespace {

void check_bn(const Tensor& x, const Tensor& gamma) {
    require_rank(x, 4, "batchnorm input");
    if (gamma.rank() != 1 || gamma.dim(0) != x.dim(1)) {
        shape_error("batchnorm parameters " + to_string(gamma.shape()) + " for input " + to_string(x.shape()));
    }
}

}  // namespace

Tensor batchnorm_inference(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& running_mean,
                           const Tensor& running_var, double eps) {
    check_bn(x, gamma);
    Tensor out(x.shape());
    const int n = x.dim(0);
    const int c = x.dim(1);
    const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    for (int j = 0; j < c; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        const real scale = gamma[jj] / static_cast<real>(std::sqrt(static_cast<double>(running_var[jj]) + eps));
        const real shift = beta[jj] - running_mean[jj] * scale;
        for (int i = 0; i < n; ++i) {
            const std::size_t base = (static_cast<std::size_t>(i) * c + jj) * plane;
            for (std::size_t q = 0; q < plane; ++q) out[base + q] = x[base + q] * scale + shift;
        }
    }
    return out;
}

Tensor batchnorm_train_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                               BatchNormCache& cache) {
    check_bn(x, gamma);
    const int n = x.dim(0);
    const int c = x.dim(1);
    const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    const double count = static_cast<double>(n) * static_cast<double>(plane);
    if (count == 0) shape_error("batchnorm over an empty batch");
    cache.mean.assign(static_cast<std::size_t>(c), 0.0);
    cache.inv_std.assign(static_cast<std::size_t>(c), 0.0);
    Tensor out(x.shape());
    for (int j = 0; j < c; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::size_t base = (static_cast<std::size_t>(i) * c + jj) * plane;
            for (std::size_t q = 0; q < plane; ++q) sum += x[base + q];
        }
        const double mean = sum / count;
        double sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::size_t base = (static_cast<std::size_t>(i) * c + jj) * plane;
            for (std::size_t q = 0; q < plane; ++q) {
                const double dv = x[base + q] - mean;
                sq += dv * dv;
            }
        }
        const double inv_std = 1.0 / std::sqrt(sq / count + eps);
        cache.mean[jj] = mean;
        cache.inv_std[jj] = inv_std;
        const double gm = gamma[jj];
        const double bt = beta[jj];
        for (int i = 0; i < n; ++i) {
            const std::size_t base = (static_cast<std::size_t>(i) * c + jj) * plane;
            for (std::size_t q = 0; q < plane; ++q) {
                out[base + q] = static_cast<real>((x[base + q] - mean) * inv_std * gm + bt);
            }
        }
    }
    return out;
}

BatchNormGrads batchnorm_train_backward(const Tensor& x, const Tensor& gamma, const BatchNormCache& cache,
                                        const Tensor& grad_out) {
    check_bn(x, gamma);
    const int n = x.dim(0);
    const int c = x.dim(1);
    const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    const double count = static_cast<double>(n) * static_cast<double>(plane);
    BatchNormGrads g{Tensor(x.shape()), Tensor({c}), Tensor({c})};
    for (int j = 0; j < c; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        const double mean = cache.mean[jj];
        const double inv_std = cache.inv_std[jj];
        double dgamma = 0.0;
        double dbeta = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::size_t base = (static_cast<std::size_t>(i) * c + jj) * plane;
            for (std::size_t q = 0; q < plane; ++q) {
                const double xhat = (x[base + q] - mean) * inv_std;
                dgamma += grad_out[base + q] * xhat;
                dbeta += grad_out[base + q];
            }
        }
        g.gamma[jj] = static_cast<real>(dgamma);
        g.beta[jj] = static_cast<real>(dbeta);
        const double k = gamma[jj] * inv_std / count;
        for (int i = 0; i < n; ++i) {
            const std::size_t base = (static_cast<std::size_t>(i) * c + jj) * plane;
            for (std::size_t q = 0; q < plane; ++q) {
                const double xhat = (x[base + q] - mean) * inv_std;
                g.input[base + q] = static_cast<real>(k * (count * grad_out[base + q] - dbeta - xhat * dgamma));
            }
        }
    }
    return g;
}

BatchNormGrads batchnorm_inference_backward(const Tensor& x, const Tensor& gamma, const Tensor& running_mean,
                                            const Tensor& running_var, double eps, const Tensor& grad_out) {
    check_bn(x, gamma);
    const int n = x.dim(0);
    const int c = x.dim(1);
    const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    BatchNormGrads g{Tensor(x.shape()), Tensor({c}), Tensor({c})};
    for (int j = 0; j < c; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        const double inv_std = 1.0 / std::sqrt(static_cast<double>(running_var[jj]) + eps);
        const double mean = running_mean[jj];
        double dgamma = 0.0;
        double dbeta = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::size_t base = (static_cast<std::size_t>(i) * c + jj) * plane;
            for (std::size_t q = 0; q < plane; ++q) {
                dgamma += grad_out[base + q] * (x[base + q] - mean) * inv_std;
                dbeta += grad_out[base + q];
                g.input[base + q] = static_cast<real>(grad_out[base + q] * gamma[jj] * inv_std);
            }
        }
        g.gamma[jj] = static_cast<real>(dgamma);
        g.beta[jj] = static_cast<real>(dbeta);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Activations

real activate(real v, Activation kind) noexcept {
    switch (kind) {
        case Activation::ReLU: return v > 0 ? v : real(0);
        case Activation::ReLU6: return std::clamp(v, real(0), real(6));
        case Activation::HardSwish: return v * std::clamp(v + real(3), real(0), real(6)) / real(6);
        case Activation::HardSigmoid: return std::clamp(v + real(3), real(0), real(6)) / real(6);
        case Activation::SiLU: return v / (real(1) + std::exp(-v));
        case Activation::Sigmoid: return real(1) / (real(1) + std::exp(-v));
    }
    return v;
}

real activate_derivative(real v, Activation kind) noexcept {
    switch (kind) {
        case Activation::ReLU: return v > 0 ? real(1) : real(0);
        case Activation::ReLU6: return (v > 0 && v < 6) ? real(1) : real(0);
        case Activation::HardSwish:
            if (v < -3) return real(0);
            if (v > 3) return real(1);
            return (real(2) * v + real(3)) / real(6);
        case Activation::HardSigmoid: return (v > -3 && v < 3) ? real(1) / real(6) : real(0);
        case Activation::SiLU: {
            const real s = real(1) / (real(1) + std::exp(-v));
            return s * (real(1) + v * (real(1) - s));
        }
        case Activation::Sigmoid: {
            const real s = real(1) / (real(1) + std::exp(-v));
            return s * (real(1) - s);
        }
    }
    return real(1);
}

Tensor activation_forward(const Tensor& x, Activation kind) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = activate(x[i], kind);
    return out;
}

Tensor activation_backward(const Tensor& x, const Tensor& grad_out, Activation kind) {
    if (x.shape() != grad_out.shape()) shape_error("activation grad shape mismatch");
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = grad_out[i] * activate_derivative(x[i], kind);
    return out;
}

// ---------------------------------------------------------------------------
// Pooling

Tensor global_avg_pool_forward(const Tensor& x) {
    require_rank(x, 4, "global_avg_pool input");
    const int n = x.dim(0);
    const int c = x.dim(1);
    const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    if (plane == 0) shape_error("global_avg_pool over empty spatial extent");
    Tensor out({n, c, 1, 1});
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * c; ++i) {
        real s = 0;
        const real* p = x.data() + i * plane;
        for (std::size_t q = 0; q < plane; ++q) s += p[q];
        out[i] = s / static_cast<real>(plane);
    }
    return out;
}

Tensor global_avg_pool_backward(const Shape& input_shape, const Tensor& grad_out) {
    Tensor g(input_shape);
    const std::size_t plane = static_cast<std::size_t>(input_shape[2]) * input_shape[3];
    const std::size_t planes = static_cast<std::size_t>(input_shape[0]) * input_shape[1];
    if (grad_out.size() != planes) shape_error("global_avg_pool grad shape mismatch");
    for (std::size_t i = 0; i < planes; ++i) {
        const real v = grad_out[i] / static_cast<real>(plane);
        std::fill(g.data() + i * plane, g.data() + (i + 1) * plane, v);
    }
    return g;
}

int max_pool_out_size(int in, const MaxPoolGeometry& g) noexcept {
    const int span = in + 2 * g.padding - g.kernel;
    int out = (g.ceil_mode ? (span + g.stride - 1) / g.stride : span / g.stride) + 1;
    // The last window must start inside the input or left padding.
    if (g.ceil_mode && (out - 1) * g.stride >= in + g.padding) --out;
    return out;
}

Tensor max_pool_forward(const Tensor& x, const MaxPoolGeometry& g, std::vector<std::size_t>* argmax) {
    require_rank(x, 4, "max_pool input");
    const int n = x.dim(0);
    const int c = x.dim(1);
    const int h = x.dim(2);
    const int w = x.dim(3);
    const int ho = max_pool_out_size(h, g);
    const int wo = max_pool_out_size(w, g);
    if (ho <= 0 || wo <= 0 || g.padding * 2 > g.kernel) shape_error("max_pool window does not fit " + to_string(x.shape()));
    Tensor out({n, c, ho, wo});
    if (argmax) argmax->assign(out.size(), 0);
    std::size_t o = 0;
    for (int i = 0; i < n * c; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * h * w;
        for (int oh = 0; oh < ho; ++oh) {
            const int h0 = std::max(0, oh * g.stride - g.padding);
            const int h1 = std::min(h, oh * g.stride - g.padding + g.kernel);
            for (int ow = 0; ow < wo; ++ow, ++o) {
                const int w0 = std::max(0, ow * g.stride - g.padding);
                const int w1 = std::min(w, ow * g.stride - g.padding + g.kernel);
                real best = -std::numeric_limits<real>::infinity();
                std::size_t best_idx = base + static_cast<std::size_t>(h0) * w + w0;
                for (int ih = h0; ih < h1; ++ih) {
                    for (int iw = w0; iw < w1; ++iw) {
                        const std::size_t idx = base + static_cast<std::size_t>(ih) * w + iw;
                        if (x[idx] > best) {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                out[o] = best;
                if (argmax) (*argmax)[o] = best_idx;
            }
        }
    }
    return out;
}

Tensor max_pool_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax, const Tensor& grad_out) {
    if (argmax.size() != grad_out.size()) shape_error("max_pool grad shape mismatch");
    Tensor g(input_shape);
    for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += grad_out[o];
    return g;
}

// ---------------------------------------------------------------------------
// Linear

Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor* bias) {
    require_rank(x, 2, "linear input");
    require_rank(weight, 2, "linear weight");
    if (x.dim(1) != weight.dim(1)) {
        shape_error("linear input " + to_string(x.shape()) + " vs weight " + to_string(weight.shape()));
    }
    const int n = x.dim(0);
    const int out_f = weight.dim(0);
    Tensor out({n, out_f});
    if (n > 0) gemm_nt(n, out_f, x.dim(1), x.data(), weight.data(), out.data(), false);
    if (bias != nullptr && !bias->empty()) {
        if (bias->size() != static_cast<std::size_t>(out_f)) shape_error("linear bias size mismatch");
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < out_f; ++j) out[static_cast<std::size_t>(i) * out_f + j] += (*bias)[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

LinearGrads linear_backward(const Tensor& x, const Tensor& weight, bool has_bias, const Tensor& grad_out) {
    const int n = x.dim(0);
    const int in_f = x.dim(1);
    const int out_f = weight.dim(0);
    if (grad_out.shape() != Shape{n, out_f}) shape_error("linear grad shape mismatch");
    LinearGrads g{Tensor(x.shape()), Tensor(weight.shape()), has_bias ? Tensor({out_f}) : Tensor()};
    if (n == 0) return g;
    gemm_nn(n, in_f, out_f, grad_out.data(), weight.data(), g.input.data(), false);
    gemm_tn(out_f, in_f, n, grad_out.data(), x.data(), g.weight.data(), false);
    if (has_bias) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < out_f; ++j) g.bias[static_cast<std::size_t>(j)] += grad_out[static_cast<std::size_t>(i) * out_f + j];
        }
    }
    return g;
}

Tensor softmax(const Tensor& logits) {
    require_rank(logits, 2, "softmax input");
    const int n = logits.dim(0);
    const int k = logits.dim(1);
    Tensor out(logits.shape());
    for (int i = 0; i < n; ++i) {
        const real* row = logits.data() + static_cast<std::size_t>(i) * k;
        real* dst = out.data() + static_cast<std::size_t>(i) * k;
        const real mx = *std::max_element(row, row + k);
        real sum = 0;
        for (int j = 0; j < k; ++j) {
            dst[j] = std::exp(row[j] - mx);
            sum += dst[j];
        }
        for (int j = 0; j < k; ++j) dst[j] /= sum;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Channel manipulation

Tensor channel_shuffle(const Tensor& x, int groups) {
    require_rank(x, 4, "channel_shuffle input");
    const int c = x.dim(1);
    if (groups <= 0 || c % groups != 0) {
        throw Error(Errc::IndivisibleChannels,
                    std::to_string(c) + " channels into " + std::to_string(groups) + " groups");
    }
    const int per = c / groups;
    const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    Tensor out(x.shape());
    for (int n = 0; n < x.dim(0); ++n) {
        for (int gi = 0; gi < groups; ++gi) {
            for (int i = 0; i < per; ++i) {
                const int src = gi * per + i;
                const int dst = i * groups + gi;
                const real* s = x.data() + (static_cast<std::size_t>(n) * c + src) * plane;
                std::copy(s, s + plane, out.data() + (static_cast<std::size_t>(n) * c + dst) * plane);
            }
        }
    }
    return out;
}

Tensor channel_shuffle_backward(const Tensor& grad_out, int groups) {
    return channel_shuffle(grad_out, grad_out.dim(1) / groups);
}

Tensor concat_channels(std::span<const Tensor* const> parts) {
    if (parts.empty()) shape_error("concat of zero tensors");
    const Shape& s0 = parts[0]->shape();
    require_rank(*parts[0], 4, "concat input");
    int total = 0;
    for (const Tensor* t : parts) {
        if (t->rank() != 4 || t->dim(0) != s0[0] || t->dim(2) != s0[2] || t->dim(3) != s0[3]) {
            shape_error("concat inputs " + to_string(s0) + " and " + to_string(t->shape()) + " disagree");
        }
        total += t->dim(1);
    }
    Tensor out({s0[0], total, s0[2], s0[3]});
    const std::size_t plane = static_cast<std::size_t>(s0[2]) * s0[3];
    for (int n = 0; n < s0[0]; ++n) {
        real* dst = out.data() + static_cast<std::size_t>(n) * total * plane;
        for (const Tensor* t : parts) {
            const std::size_t len = static_cast<std::size_t>(t->dim(1)) * plane;
            const real* src = t->data() + static_cast<std::size_t>(n) * len;
            dst = std::copy(src, src + len, dst);
        }
    }
    return out;
}

Tensor slice_channels(const Tensor& x, int begin, int end) {
    require_rank(x, 4, "slice input");
    if (begin < 0 || end > x.dim(1) || begin >= end) {
        shape_error("channel slice [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
                    to_string(x.shape()));
    }
    const int c = x.dim(1);
    const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    Tensor out({x.dim(0), end - begin, x.dim(2), x.dim(3)});
    for (int n = 0; n < x.dim(0); ++n) {
        const real* src = x.data() + (static_cast<std::size_t>(n) * c + begin) * plane;
        std::copy(src, src + static_cast<std::size_t>(end - begin) * plane,
                  out.data() + static_cast<std::size_t>(n) * (end - begin) * plane);
    }
    return out;
}

Tensor scale_channels(const Tensor& x, const Tensor& gate) {
    require_rank(x, 4, "scale input");
    if (gate.shape() != Shape{x.dim(0), x.dim(1), 1, 1}) {
        shape_error("gate " + to_string(gate.shape()) + " for " + to_string(x.shape()));
    }
    Tensor out(x.shape());
    const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    for (std::size_t i = 0; i < gate.size(); ++i) {
        const real gv = gate[i];
        for (std::size_t q = 0; q < plane; ++q) out[i * plane + q] = x[i * plane + q] * gv;
    }
    return out;
}

}  // namespace bacnet::nn
