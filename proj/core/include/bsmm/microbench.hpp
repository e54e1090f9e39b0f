#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bsmm/smm.hpp"

namespace bsmm {

struct MicrobenchKeyResult {
    KernelKey key;
    std::size_t pairs = 0;       // distinct (A, B) pairs in the working set
    std::size_t flops = 0;       // 2*m*n*k * pairs * reps, exact
    double seconds = 0.0;        // best-of-3 elapsed for the timed loop
    double gflops = 0.0;
};

struct MicrobenchReport {
    std::vector<MicrobenchKeyResult> keys;
    double geomean_gflops = 0.0;
    std::size_t working_set_bytes = 0;
    std::size_t reps = 0;
};

/// Streams gemm_acc over enough distinct (A, B) pairs to fill the requested
/// working set while accumulating into a single resident C, once per key.
/// Each key is timed three times and the best pass is reported. Rates are
/// 2*m*n*k*pairs*reps / elapsed. Single-threaded: this measures kernel
/// throughput, not parallel throughput.
MicrobenchReport run_microbench(
    std::span<const KernelKey> keys, std::size_t working_set_bytes, std::size_t reps,
    const KernelTable& table = KernelTable::with_default_specializations());

}  // namespace bsmm
