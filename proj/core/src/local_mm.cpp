#include "bsmm/local_mm.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <exception>
#include <string>
#include <thread>
#include <unordered_map>

#include "bsmm/errors.hpp"

namespace bsmm {
namespace {

void bisect(Range rows, Range cols, std::size_t cutoff, std::vector<Tile>& out) {
    if (rows.extent() <= cutoff && cols.extent() <= cutoff) {
        out.push_back({rows, cols});
        return;
    }
    if (rows.extent() >= cols.extent()) {
        const std::size_t mid = rows.begin + rows.extent() / 2;
        bisect({rows.begin, mid}, cols, cutoff, out);
        bisect({mid, rows.end}, cols, cutoff, out);
    } else {
        const std::size_t mid = cols.begin + cols.extent() / 2;
        bisect(rows, {cols.begin, mid}, cutoff, out);
        bisect(rows, {mid, cols.end}, cutoff, out);
    }
}

}  // namespace

std::vector<Tile> plan_traversal(Range rows, Range cols, std::size_t cutoff) {
    if (rows.begin >= rows.end) {
        throw ParameterError("traversal row range is empty");
    }
    if (cols.begin >= cols.end) {
        throw ParameterError("traversal column range is empty");
    }
    if (cutoff < 1) {
        throw ParameterError("traversal cutoff must be >= 1");
    }
    std::vector<Tile> tiles;
    bisect(rows, cols, cutoff, tiles);
    return tiles;
}

WorkerPartition partition_rows(std::span<const std::size_t> weights, std::size_t workers) {
    if (workers < 1) {
        throw ParameterError("partition requires workers >= 1");
    }
    WorkerPartition part;
    part.weights.assign(weights.begin(), weights.end());
    part.ranges.reserve(workers);

    std::size_t total = 0;
    for (std::size_t w : weights) total += w;
    const double target = static_cast<double>(total) / static_cast<double>(workers);

    std::size_t row = 0;
    for (std::size_t w = 0; w + 1 < workers; ++w) {
        const std::size_t begin = row;
        std::size_t taken = 0;
        while (row < weights.size() &&
               (row == begin || static_cast<double>(taken) < target)) {
            taken += weights[row];
            ++row;
            if (static_cast<double>(taken) >= target) break;
        }
        part.ranges.push_back({begin, row});
    }
    part.ranges.push_back({row, weights.size()});
    return part;
}

namespace {

/// Per-c-block accumulator: one zero-initialized partial buffer per distinct
/// shared block dimension, kept sorted by that dimension. Contributions with
/// the same dimension land in the same partial in ascending-k order; the
/// finalize step combines partials in ascending-dimension order. Both orders
/// depend only on the operand structure, never on worker count, batch
/// capacity, or tile shape, which is what makes the result bit-stable.
struct CAccum {
    std::vector<std::pair<std::size_t, std::vector<double>>> parts;

    double* part(std::size_t kdim, std::size_t elems) {
        auto it = std::lower_bound(
            parts.begin(), parts.end(), kdim,
            [](const auto& p, std::size_t v) { return p.first < v; });
        if (it == parts.end() || it->first != kdim) {
            it = parts.insert(it, {kdim, std::vector<double>(elems, 0.0)});
        }
        return it->second.data();
    }
};

struct BatchEntry {
    const double* a;
    const double* b;
    double* c;
};

struct Batch {
    std::vector<BatchEntry> entries;
};

struct WorkerCtx {
    // inputs
    Range rows;
    const BlockCsr* a = nullptr;
    const BlockCsr* b = nullptr;
    const KernelTable* table = nullptr;
    double eps = 0.0;
    std::size_t batch_capacity = 0;
    std::size_t cutoff = 0;
    bool record_detail = false;

    // outputs, owned exclusively by this worker until the join
    std::map<std::pair<std::size_t, std::size_t>, CAccum> accums;
    std::unordered_map<KernelKey, Batch, KernelKeyHash> batches;
    std::uint64_t executed = 0;
    std::uint64_t skipped = 0;
    std::uint64_t flops = 0;
    double busy_seconds = 0.0;
    std::vector<ExecutedRecord> log;
    std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> skipped_per_block;
    std::exception_ptr failure;

    void flush(const KernelKey& key, Batch& batch) {
        const Kernel kernel = table->dispatch(key);  // one dispatch per batch
        for (const BatchEntry& e : batch.entries) {
            kernel.fn(e.a, e.b, e.c, key.m, key.n, key.k);
        }
        batch.entries.clear();
    }

    void visit_pair(std::size_t i, std::size_t j, std::size_t a_begin, std::size_t a_end,
                    std::size_t m) {
        const std::size_t n = b->layout().col_size(j);
        const auto& b_cols = b->col_idx();
        for (std::size_t ea = a_begin; ea < a_end; ++ea) {
            const std::size_t k = a->col_idx()[ea];
            const auto first = b_cols.begin() + static_cast<std::ptrdiff_t>(b->row_ptr()[k]);
            const auto last = b_cols.begin() + static_cast<std::ptrdiff_t>(b->row_ptr()[k + 1]);
            const auto it = std::lower_bound(first, last, j);
            if (it == last || *it != j) continue;  // not a candidate
            const std::size_t eb = static_cast<std::size_t>(it - b_cols.begin());

            if (!(a->norms()[ea] * b->norms()[eb] > eps)) {
                ++skipped;
                if (record_detail) ++skipped_per_block[{i, j}];
                continue;
            }

            const std::size_t kdim = a->layout().col_size(k);
            const KernelKey key{m, n, kdim};
            assert(i >= rows.begin && i < rows.end);
            double* c_part = accums[{i, j}].part(kdim, m * n);
            Batch& batch = batches[key];
            batch.entries.push_back({a->block_data().data() + a->block_offsets()[ea],
                                     b->block_data().data() + b->block_offsets()[eb],
                                     c_part});
            ++executed;
            flops += 2ull * m * n * kdim;
            if (record_detail) log.push_back({i, k, j, key});
            if (batch.entries.size() >= batch_capacity) flush(key, batch);
        }
    }

    void run() noexcept {
        try {
            const auto t0 = std::chrono::steady_clock::now();
            const std::size_t n_cols = b->layout().n_col_blocks();
            if (rows.extent() > 0 && n_cols > 0) {
                const std::vector<Tile> tiles = plan_traversal(rows, {0, n_cols}, cutoff);
                for (const Tile& tile : tiles) {
                    for (std::size_t i = tile.rows.begin; i < tile.rows.end; ++i) {
                        const std::size_t a_begin = a->row_ptr()[i];
                        const std::size_t a_end = a->row_ptr()[i + 1];
                        if (a_begin == a_end) continue;
                        const std::size_t m = a->layout().row_size(i);
                        for (std::size_t j = tile.cols.begin; j < tile.cols.end; ++j) {
                            visit_pair(i, j, a_begin, a_end, m);
                        }
                    }
                }
            }
            for (auto& [key, batch] : batches) {
                if (!batch.entries.empty()) flush(key, batch);
            }
            busy_seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
        } catch (...) {
            failure = std::current_exception();
        }
    }
};

}  // namespace

std::pair<BlockCsr, LocalMmStats> multiply_local(const BlockCsr& a, const BlockCsr& b,
                                                 const MultiplyOptions& options) {
    const auto t_start = std::chrono::steady_clock::now();
    if (std::isnan(options.eps) || options.eps < 0.0) {
        throw ParameterError("filter threshold must be >= 0");
    }
    if (options.workers < 1) {
        throw ParameterError("multiply requires workers >= 1");
    }
    if (options.batch_capacity < 1) {
        throw ParameterError("multiply requires batch_capacity >= 1");
    }
    if (options.traversal_cutoff < 1) {
        throw ParameterError("multiply requires traversal_cutoff >= 1");
    }
    if (a.layout().col_block_sizes() != b.layout().row_block_sizes()) {
        throw ParameterError("inner layouts disagree: a has " +
                             std::to_string(a.layout().n_col_blocks()) +
                             " block columns, b has " +
                             std::to_string(b.layout().n_row_blocks()) +
                             " block rows, or their block sizes differ");
    }

    const BlockLayout c_layout(a.layout().row_block_sizes(), b.layout().col_block_sizes());
    const KernelTable& table = KernelTable::with_default_specializations();

    std::vector<std::size_t> weights(a.layout().n_row_blocks());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] = a.row_ptr()[i + 1] - a.row_ptr()[i];
    }
    const WorkerPartition partition = partition_rows(weights, options.workers);

    std::vector<WorkerCtx> ctx(options.workers);
    for (std::size_t w = 0; w < options.workers; ++w) {
        ctx[w].rows = partition.ranges[w];
        ctx[w].a = &a;
        ctx[w].b = &b;
        ctx[w].table = &table;
        ctx[w].eps = options.eps;
        ctx[w].batch_capacity = options.batch_capacity;
        ctx[w].cutoff = options.traversal_cutoff;
        ctx[w].record_detail = options.record_detail;
    }

    if (options.workers == 1) {
        ctx[0].run();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(options.workers - 1);
        for (std::size_t w = 1; w < options.workers; ++w) {
            threads.emplace_back(&WorkerCtx::run, &ctx[w]);
        }
        ctx[0].run();
        for (std::thread& t : threads) t.join();
    }
    for (const WorkerCtx& c : ctx) {
        if (c.failure) std::rethrow_exception(c.failure);
    }

    LocalMmStats stats;
    stats.worker_busy_seconds.reserve(options.workers);
    BlockCsrBuilder builder(c_layout);
    for (WorkerCtx& c : ctx) {
        for (auto& [coord, acc] : c.accums) {
            if (coord.first < c.rows.begin || coord.first >= c.rows.end) {
                throw IntegrityError("c block row " + std::to_string(coord.first) +
                                     " written outside its owner's range");
            }
            std::vector<double>& combined = acc.parts.front().second;
            for (std::size_t p = 1; p < acc.parts.size(); ++p) {
                const std::vector<double>& part = acc.parts[p].second;
                for (std::size_t e = 0; e < combined.size(); ++e) {
                    combined[e] += part[e];
                }
            }
            builder.append(coord.first, coord.second, combined);
        }
        stats.executed += c.executed;
        stats.skipped += c.skipped;
        stats.flops += c.flops;
        stats.worker_busy_seconds.push_back(c.busy_seconds);
        if (options.record_detail) {
            stats.executed_log.insert(stats.executed_log.end(), c.log.begin(), c.log.end());
            for (const auto& [coord, count] : c.skipped_per_block) {
                stats.skipped_per_block[coord] += count;
            }
        }
    }
    BlockCsr result = builder.finish();

    double max_busy = 0.0;
    double sum_busy = 0.0;
    for (double t : stats.worker_busy_seconds) {
        max_busy = std::max(max_busy, t);
        sum_busy += t;
    }
    const double mean_busy = sum_busy / static_cast<double>(options.workers);
    stats.imbalance = mean_busy > 0.0 ? (max_busy - mean_busy) / mean_busy : 0.0;
    stats.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(result), std::move(stats)};
}

std::pair<BlockCsr, LocalMmStats> multiply_local(const BlockCsr& a, const BlockCsr& b,
                                                 double eps, std::size_t workers,
                                                 std::size_t batch_capacity) {
    MultiplyOptions options;
    options.eps = eps;
    options.workers = workers;
    options.batch_capacity = batch_capacity;
    return multiply_local(a, b, options);
}

std::uint64_t count_flops(const LocalMmStats& stats) { return stats.flops; }

}  // namespace bsmm
