#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "bsmm/block_csr.hpp"
#include "bsmm/smm.hpp"

namespace bsmm {

struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;  // half-open

    std::size_t extent() const noexcept { return end - begin; }
    bool operator==(const Range&) const = default;
};

struct Tile {
    Range rows;
    Range cols;
    bool operator==(const Tile&) const = default;
};

/// Cache-oblivious traversal order: recursive bisection of the larger
/// dimension (rows win ties) until both extents are <= cutoff, leaves
/// emitted depth-first, lower half first. Within a leaf, iteration is row
/// outer, column inner. The concatenated leaves cover rows x cols exactly
/// once.
std::vector<Tile> plan_traversal(Range rows, Range cols, std::size_t cutoff);

/// Contiguous per-worker block-row ranges, greedy prefix split on the given
/// weights.
struct WorkerPartition {
    std::vector<Range> ranges;           // one per worker, ascending, covering
    std::vector<std::size_t> weights;    // the weights the split used
};

/// Each worker except the last takes at least one remaining row and keeps
/// taking while its weight stays below total/workers; the last worker takes
/// the remainder. Workers beyond the row count get empty ranges.
WorkerPartition partition_rows(std::span<const std::size_t> weights, std::size_t workers);

struct ExecutedRecord {
    std::size_t i = 0;  // a block row
    std::size_t k = 0;  // shared block dimension
    std::size_t j = 0;  // b block col
    KernelKey key;
};

struct LocalMmStats {
    std::uint64_t flops = 0;     // 2*m*n*k summed over executed entries
    std::uint64_t executed = 0;  // entries that ran
    std::uint64_t skipped = 0;   // candidates removed by the norm filter
    std::vector<double> worker_busy_seconds;
    double imbalance = 0.0;      // (max busy - mean busy) / mean busy
    double total_seconds = 0.0;  // wall time of the whole call

    // Populated only when MultiplyOptions::record_detail is set.
    std::vector<ExecutedRecord> executed_log;
    std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> skipped_per_block;
};

struct MultiplyOptions {
    double eps = 0.0;
    std::size_t workers = 1;
    std::size_t batch_capacity = 1024;
    std::size_t traversal_cutoff = 16;
    bool record_detail = false;
};

/// C := A * B over blocked-CSR operands with on-the-fly norm filtering: the
/// candidate triple (i, k, j) runs iff norm(a_ik) * norm(b_kj) > eps. C
/// blocks materialize on first executed contribution; a block all of whose
/// candidates were skipped is not created. Per-c-block accumulation order is
/// fixed by (k dimension, k) alone, so the result is bit-identical across
/// workers, batch_capacity, and traversal cutoff.
std::pair<BlockCsr, LocalMmStats> multiply_local(const BlockCsr& a, const BlockCsr& b,
                                                 const MultiplyOptions& options);

std::pair<BlockCsr, LocalMmStats> multiply_local(const BlockCsr& a, const BlockCsr& b,
                                                 double eps, std::size_t workers = 1,
                                                 std::size_t batch_capacity = 1024);

/// Exact flop total of a run: 2 * sum of m*n*k over executed entries.
std::uint64_t count_flops(const LocalMmStats& stats);

}  // namespace bsmm
