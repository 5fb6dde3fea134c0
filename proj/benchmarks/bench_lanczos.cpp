#include <benchmark/benchmark.h>

#include "bacnet/raster.hpp"
#include "bacnet/rng.hpp"

namespace {

bacnet::raster::RasterImage noise(int w, int h) {
    bacnet::CounterRng rng(11);
    bacnet::raster::RasterImage img(w, h);
    for (auto& v : img.pixels()) v = static_cast<float>(rng.uniform());
    return img;
}

// Args: source side, target side.
void BM_LanczosResize(benchmark::State& state) {
    const auto src = noise(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
    const int target = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(bacnet::raster::lanczos_resize(src, target, target));
}
BENCHMARK(BM_LanczosResize)->Args({700, 224})->Args({100, 224})->Args({1024, 224})->Unit(benchmark::kMillisecond);

void BM_EncodePng(benchmark::State& state) {
    const auto img = noise(224, 224);
    for (auto _ : state) benchmark::DoNotOptimize(bacnet::raster::encode_png(img));
}
BENCHMARK(BM_EncodePng)->Unit(benchmark::kMillisecond);

}  // namespace
