#include <benchmark/benchmark.h>

#include "bacnet/nn/ops.hpp"
#include "bacnet/rng.hpp"

namespace {

using bacnet::nn::Tensor;

Tensor random(bacnet::nn::Shape shape, std::uint64_t stream) {
    bacnet::CounterRng rng(7, stream);
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<bacnet::nn::real>(rng.uniform(-1.0, 1.0));
    return t;
}

// Args: channels, spatial size.
void BM_Conv3x3(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const int s = static_cast<int>(state.range(1));
    const Tensor x = random({1, c, s, s}, 1);
    const Tensor w = random({c, c, 3, 3}, 2);
    for (auto _ : state) benchmark::DoNotOptimize(bacnet::nn::conv2d_forward(x, w, nullptr, {1, 1, 1}));
    state.SetItemsProcessed(state.iterations() * 2LL * c * c * 9 * s * s);
}
BENCHMARK(BM_Conv3x3)->Args({16, 56})->Args({32, 28})->Args({64, 14})->Unit(benchmark::kMicrosecond);

void BM_Pointwise(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const Tensor x = random({1, c, 28, 28}, 3);
    const Tensor w = random({2 * c, c, 1, 1}, 4);
    for (auto _ : state) benchmark::DoNotOptimize(bacnet::nn::conv2d_forward(x, w, nullptr, {1, 0, 1}));
    state.SetItemsProcessed(state.iterations() * 2LL * c * 2 * c * 28 * 28);
}
BENCHMARK(BM_Pointwise)->Arg(32)->Arg(96)->Unit(benchmark::kMicrosecond);

void BM_Depthwise(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const Tensor x = random({1, c, 56, 56}, 5);
    const Tensor w = random({c, 1, 3, 3}, 6);
    for (auto _ : state) benchmark::DoNotOptimize(bacnet::nn::conv2d_forward(x, w, nullptr, {1, 1, c}));
}
BENCHMARK(BM_Depthwise)->Arg(32)->Arg(144)->Unit(benchmark::kMicrosecond);

}  // namespace
