#include <benchmark/benchmark.h>

#include "grassproj/constructions.hpp"
#include "grassproj/experiments.hpp"
#include "grassproj/highlow.hpp"
#include "grassproj/incidence.hpp"
#include "grassproj/nets.hpp"
#include "grassproj/rng.hpp"

using namespace grassproj;

static void BM_BoxDimensionSquare(benchmark::State& state) {
    Rng rng(1);
    const PointSet ps = calibration_square(static_cast<int>(state.range(0)), rng);
    const auto scales = geometric_scales(3, 6);
    for (auto _ : state) benchmark::DoNotOptimize(box_dimension(ps, scales).slope);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BoxDimensionSquare)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_GreedyNetBush(benchmark::State& state) {
    const NetCloud bush = gen_direction_bush(3, 1.0 / state.range(0), 2.0);
    for (auto _ : state) benchmark::DoNotOptimize(greedy_net(bush.points, 2.0 * bush.delta).size());
    state.counters["lines"] = static_cast<double>(bush.size());
}
BENCHMARK(BM_GreedyNetBush)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_CountIncidences(benchmark::State& state) {
    const double delta = 1.0 / state.range(0);
    const double abs_delta = construction::kUnit * delta;
    const NetCloud lines = gen_direction_bush(3, delta, 2.0);
    Rng rng(2);
    const PointSet Vs = subspace_ball_net(3, 2, 0.5, delta, rng);
    SlabFamilies TV;
    for (std::size_t v = 0; v < Vs.size(); ++v)
        TV.push_back(build_slab_family(lines.points, subspace_at(Vs, v), abs_delta, 1.0, 1.0, 0.005));
    for (auto _ : state) benchmark::DoNotOptimize(count_incidences(TV, lines.points, abs_delta));
    state.counters["V"] = static_cast<double>(Vs.size());
}
BENCHMARK(BM_CountIncidences)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_ForwardTransform4D(benchmark::State& state) {
    const int M = static_cast<int>(state.range(0));
    GridField f = GridField::zeros(4, M);
    Rng rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : f.values) v = {u(rng), 0.0};
    for (auto _ : state) benchmark::DoNotOptimize(forward_transform(f).values.data());
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(grid_bytes(4, M)));
}
BENCHMARK(BM_ForwardTransform4D)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_HighLowSplit(benchmark::State& state) {
    HighLowParams p;
    const HighLowSetup setup = highlow_setup(p);
    const GridField F = assemble_field(setup.TV, p);
    for (auto _ : state) benchmark::DoNotOptimize(high_low_split(F, default_K(p.delta), p.delta).low.values.data());
}
BENCHMARK(BM_HighLowSplit)->Unit(benchmark::kMillisecond);

static void BM_MarstrandScanBush(benchmark::State& state) {
    ExperimentConfig c;
    c.seed = 1;
    c.delta_rel = 1.0 / 32;
    c.params.delta = construction::kUnit * c.delta_rel;
    c.params.a = 2.0;
    c.num_V = static_cast<int>(state.range(0));
    c.scales = {0.25, 0.125, 0.0625};
    for (auto _ : state) benchmark::DoNotOptimize(marstrand_scan(c).quantiles.median);
}
BENCHMARK(BM_MarstrandScanBush)->Arg(10)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
