#include "bsmm/microbench.hpp"

#include <chrono>
#include <random>
#include <string>

#include "bsmm/errors.hpp"
#include "bsmm/rng.hpp"

namespace bsmm {
namespace {

volatile double g_sink;  // defeats dead-code elimination of the timed loop

double time_pass(KernelFn fn, const std::vector<double>& pool, std::size_t pair_stride,
                 std::size_t a_elems, std::size_t pairs, std::size_t reps,
                 std::vector<double>& c, KernelKey key) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t rep = 0; rep < reps; ++rep) {
        const double* base = pool.data();
        for (std::size_t i = 0; i < pairs; ++i) {
            const double* a = base + i * pair_stride;
            const double* b = a + a_elems;
            fn(a, b, c.data(), key.m, key.n, key.k);
        }
    }
    const auto t1 = std::chrono::steady_clock::now();
    g_sink = c[0];
    return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

MicrobenchReport run_microbench(std::span<const KernelKey> keys,
                                std::size_t working_set_bytes, std::size_t reps,
                                const KernelTable& table) {
    if (keys.empty()) {
        throw ParameterError("microbench requires at least one kernel key");
    }
    if (reps < 1) {
        throw ParameterError("microbench requires reps >= 1");
    }

    MicrobenchReport report;
    report.working_set_bytes = working_set_bytes;
    report.reps = reps;

    std::mt19937_64 rng(mix_seed(0x6d6963726f6200ull, keys.size()));

    for (const KernelKey key : keys) {
        const std::size_t a_elems = key.m * key.k;
        const std::size_t b_elems = key.k * key.n;
        const std::size_t pair_bytes = (a_elems + b_elems) * sizeof(double);
        const std::size_t pairs = working_set_bytes / pair_bytes;
        if (pairs == 0) {
            throw ParameterError("working set of " + std::to_string(working_set_bytes) +
                                 " bytes holds no (" + std::to_string(key.m) + ", " +
                                 std::to_string(key.n) + ", " + std::to_string(key.k) +
                                 ") operand pair (" + std::to_string(pair_bytes) +
                                 " bytes each)");
        }

        std::vector<double> pool(pairs * (a_elems + b_elems));
        for (double& v : pool) {
            v = uniform_pm1(rng);
        }
        std::vector<double> c(key.m * key.n, 0.0);

        const Kernel kernel = table.dispatch(key);
        double best = time_pass(kernel.fn, pool, a_elems + b_elems, a_elems, pairs, reps,
                                c, key);
        for (int pass = 1; pass < 3; ++pass) {
            best = std::min(best, time_pass(kernel.fn, pool, a_elems + b_elems, a_elems,
                                            pairs, reps, c, key));
        }

        MicrobenchKeyResult r;
        r.key = key;
        r.pairs = pairs;
        r.flops = 2 * key.m * key.n * key.k * pairs * reps;
        r.seconds = best;
        r.gflops = static_cast<double>(r.flops) / best / 1e9;
        report.keys.push_back(r);
    }

    std::vector<double> rates;
    rates.reserve(report.keys.size());
    for (const auto& r : report.keys) {
        rates.push_back(r.gflops);
    }
    report.geomean_gflops = geometric_mean(rates);
    return report;
}

}  // namespace bsmm
