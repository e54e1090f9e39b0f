#include <benchmark/benchmark.h>

#include <cstddef>
#include <random>
#include <vector>

#include "bsmm/rng.hpp"
#include "bsmm/smm.hpp"

namespace {

// Rotating operand pool sized well past L2 so steady-state calls pay the
// memory traffic a real batch would, not a hot-cache fantasy number.
struct OperandPool {
    explicit OperandPool(std::size_t m, std::size_t bytes = 1u << 22) {
        const std::size_t pair_bytes = 2 * m * m * sizeof(double);
        const std::size_t pairs = std::max<std::size_t>(1, bytes / pair_bytes);
        std::mt19937_64 rng(bsmm::mix_seed(0xb37cull, 0));
        a.assign(pairs, std::vector<double>(m * m));
        b.assign(pairs, std::vector<double>(m * m));
        c.assign(m * m, 0.0);
        for (auto& v : a) {
            for (double& x : v) x = bsmm::uniform_pm1(rng);
        }
        for (auto& v : b) {
            for (double& x : v) x = bsmm::uniform_pm1(rng);
        }
    }

    std::vector<std::vector<double>> a;
    std::vector<std::vector<double>> b;
    std::vector<double> c;
};

void BM_GemmSpecialized(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const bsmm::Kernel kernel =
        bsmm::KernelTable::with_default_specializations().dispatch({m, m, m});
    OperandPool pool(m);

    std::size_t next = 0;
    for (auto _ : state) {
        kernel.fn(pool.a[next].data(), pool.b[next].data(), pool.c.data(), m, m, m);
        benchmark::DoNotOptimize(pool.c.data());
        next = (next + 1) % pool.a.size();
    }
    state.counters["flops"] = benchmark::Counter(
        static_cast<double>(state.iterations()) * 2.0 * static_cast<double>(m * m * m),
        benchmark::Counter::kIsRate);
}
BENCHMARK(BM_GemmSpecialized)->Arg(4)->Arg(5)->Arg(8)->Arg(13)->Arg(16)->Arg(23)->Arg(32);

void BM_GemmGeneric(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    OperandPool pool(m);

    std::size_t next = 0;
    for (auto _ : state) {
        bsmm::generic_gemm_acc(pool.a[next].data(), pool.b[next].data(), pool.c.data(), m,
                               m, m);
        benchmark::DoNotOptimize(pool.c.data());
        next = (next + 1) % pool.a.size();
    }
    state.counters["flops"] = benchmark::Counter(
        static_cast<double>(state.iterations()) * 2.0 * static_cast<double>(m * m * m),
        benchmark::Counter::kIsRate);
}
BENCHMARK(BM_GemmGeneric)->Arg(4)->Arg(5)->Arg(8)->Arg(13)->Arg(16)->Arg(23)->Arg(32);

void BM_DispatchLookup(benchmark::State& state) {
    const bsmm::KernelTable& table = bsmm::KernelTable::with_default_specializations();
    const std::vector<bsmm::KernelKey> keys = table.specialized_keys();
    std::size_t next = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(table.dispatch(keys[next]).fn);
        next = (next + 1) % keys.size();
    }
}
BENCHMARK(BM_DispatchLookup);

}  // namespace

BENCHMARK_MAIN();
