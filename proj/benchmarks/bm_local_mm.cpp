#include <benchmark/benchmark.h>

#include <cmath>
#include <cstddef>
#include <utility>

#include "bsmm/block_csr.hpp"
#include "bsmm/dist_engine.hpp"
#include "bsmm/local_mm.hpp"
#include "bsmm/matrix_gen.hpp"
#include "bsmm/process_grid.hpp"

namespace {

std::pair<bsmm::BlockCsr, bsmm::BlockCsr> preset_pair(const char* name, double scale) {
    const bsmm::BenchPreset& preset = bsmm::preset_by_name(name);
    return {bsmm::generate(preset, scale, 1), bsmm::generate(preset, scale, 2)};
}

// arg: negated decimal exponent of eps (0 means no filtering).
void BM_LocalMultiplyEps(benchmark::State& state) {
    const auto [a, b] = preset_pair("h2o-dft-ls", 0.01);
    const double eps = state.range(0) == 0
                           ? 0.0
                           : std::pow(10.0, -static_cast<double>(state.range(0)));

    double flops = 0.0;
    for (auto _ : state) {
        auto [c, stats] = bsmm::multiply_local(a, b, eps);
        benchmark::DoNotOptimize(c.n_blocks());
        flops += static_cast<double>(stats.flops);
    }
    state.counters["flops"] = benchmark::Counter(flops, benchmark::Counter::kIsRate);
}
BENCHMARK(BM_LocalMultiplyEps)->Arg(0)->Arg(8)->Arg(4)->Arg(2);

void BM_LocalMultiplyWorkers(benchmark::State& state) {
    const auto [a, b] = preset_pair("h2o-dft-ls", 0.01);
    const auto workers = static_cast<std::size_t>(state.range(0));

    double flops = 0.0;
    for (auto _ : state) {
        auto [c, stats] = bsmm::multiply_local(a, b, 0.0, workers);
        benchmark::DoNotOptimize(c.n_blocks());
        flops += static_cast<double>(stats.flops);
    }
    state.counters["flops"] = benchmark::Counter(flops, benchmark::Counter::kIsRate);
}
BENCHMARK(BM_LocalMultiplyWorkers)->Arg(1)->Arg(2)->Arg(4)->UseRealTime();

void BM_LocalMultiplyMixedSizes(benchmark::State& state) {
    const auto [a, b] = preset_pair("amorph", 0.004);

    double flops = 0.0;
    for (auto _ : state) {
        auto [c, stats] = bsmm::multiply_local(a, b, 0.0);
        benchmark::DoNotOptimize(c.n_blocks());
        flops += static_cast<double>(stats.flops);
    }
    state.counters["flops"] = benchmark::Counter(flops, benchmark::Counter::kIsRate);
}
BENCHMARK(BM_LocalMultiplyMixedSizes);

// arg: grid side q, running q*q simulated ranks.
void BM_CannonGrid(benchmark::State& state) {
    const auto [a, b] = preset_pair("h2o-dft-ls", 0.01);
    const auto q = static_cast<std::size_t>(state.range(0));
    const bsmm::ProcessGrid grid(q);
    const bsmm::DistMatrix da = bsmm::distribute(a, grid, 9);
    const bsmm::DistMatrix db = bsmm::distribute(b, grid, 10);

    double flops = 0.0;
    for (auto _ : state) {
        bsmm::CannonResult result = bsmm::cannon_multiply(da, db, 0.0);
        benchmark::DoNotOptimize(result.c.shards.size());
        flops += static_cast<double>(result.flops);
    }
    state.counters["flops"] = benchmark::Counter(flops, benchmark::Counter::kIsRate);
}
BENCHMARK(BM_CannonGrid)->Arg(1)->Arg(2)->Arg(3)->UseRealTime();

void BM_TraversalPlan(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto tiles = bsmm::plan_traversal({0, n}, {0, n}, 16);
        benchmark::DoNotOptimize(tiles.data());
    }
}
BENCHMARK(BM_TraversalPlan)->Arg(256)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
