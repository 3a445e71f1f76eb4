#include <benchmark/benchmark.h>

#include "foveate/metrics.hpp"
#include "foveate/samplers.hpp"
#include "foveate/synthetic.hpp"
#include "foveate/warp.hpp"

namespace foveate {
namespace {

const MobiusParams kTheta = normalize({1.15, 0.04, -0.02, 0.93});

void BM_ForwardWarp(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const ImageBuffer img = structured_image(n, n * 3 / 4, 1);
    const SphereGeom g = geometry_for(img);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward_warp(img, kTheta, g));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(img.pixel_count()));
}
BENCHMARK(BM_ForwardWarp)->Arg(96)->Arg(256)->Arg(640)->Unit(benchmark::kMillisecond);

void BM_BassPipeline(benchmark::State& state) {
    const ImageBuffer img = structured_image(640, 480, 2);
    const SphereGeom g = geometry_for(img);
    const PixelBudget b(static_cast<double>(state.range(0)) / 100.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(bass_pipeline(img, kTheta, b, g));
    }
}
BENCHMARK(BM_BassPipeline)->Arg(1)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Vsi(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const ImageBuffer ref = structured_image(n, n * 3 / 4, 3);
    const ImageBuffer dist = uniform_sample(ref, PixelBudget(0.05));
    const VsiEvaluator eval(ref);
    for (auto _ : state) {
        benchmark::DoNotOptimize(eval.score(dist));
    }
}
BENCHMARK(BM_Vsi)->Arg(96)->Arg(256)->Arg(640)->Unit(benchmark::kMillisecond);

void BM_Sampler(benchmark::State& state) {
    const ImageBuffer img = structured_image(640, 480, 4);
    const SphereGeom g = geometry_for(img);
    SamplingSpec spec;
    spec.strategy = static_cast<Strategy>(state.range(0));
    spec.budget = PixelBudget(0.05);
    if (spec.strategy == Strategy::bass) {
        spec.theta = kTheta;
    }
    state.SetLabel(std::string(to_string(spec.strategy)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(apply_sampling(img, spec, g));
    }
}
BENCHMARK(BM_Sampler)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace foveate

BENCHMARK_MAIN();
