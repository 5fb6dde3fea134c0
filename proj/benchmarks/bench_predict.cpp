#include <benchmark/benchmark.h>

#include <string>

#include "bacnet/nn/architectures.hpp"
#include "bacnet/train.hpp"

namespace {

// One 224x224 image through each architecture.
void BM_Predict(benchmark::State& state, std::string arch) {
    const auto graph = bacnet::nn::build_architecture({arch, 32, 1.0}, 1);
    bacnet::nn::Tensor x({1, 3, 224, 224}, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(bacnet::predict(graph, x));
}
BENCHMARK_CAPTURE(BM_Predict, squeezenet1_1, std::string("squeezenet1_1"))->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Predict, shufflenet_v2_x1_0, std::string("shufflenet_v2_x1_0"))->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Predict, mobilenet_v3_small, std::string("mobilenet_v3_small"))->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Predict, mobilenet_v2, std::string("mobilenet_v2"))->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Predict, efficientnet_b0, std::string("efficientnet-b0"))->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
