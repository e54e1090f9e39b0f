#include "bsmm/dist_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <string>
#include <thread>
#include <tuple>
#include <utility>

#include "bsmm/bsm_io.hpp"
#include "bsmm/errors.hpp"
#include "bsmm/transport.hpp"

namespace bsmm {
namespace {

BlockLayout local_layout_for_rank(const BlockLayout& global, const Permutation& row_perm,
                                  const Permutation& col_perm, const ProcessGrid& grid,
                                  std::size_t rank) {
    const std::size_t q = grid.side();
    const std::size_t r = grid.row_of(rank);
    const std::size_t c = grid.col_of(rank);
    std::vector<std::size_t> rows;
    for (std::size_t pr = r; pr < global.n_row_blocks(); pr += q) {
        rows.push_back(global.row_size(row_perm.apply_inverse(pr)));
    }
    std::vector<std::size_t> cols;
    for (std::size_t pc = c; pc < global.n_col_blocks(); pc += q) {
        cols.push_back(global.col_size(col_perm.apply_inverse(pc)));
    }
    return BlockLayout(std::move(rows), std::move(cols));
}

}  // namespace

DistMatrix distribute_with_perms(const BlockCsr& m, const ProcessGrid& grid,
                                 Permutation row_perm, Permutation col_perm) {
    const BlockLayout& layout = m.layout();
    if (row_perm.size() != layout.n_row_blocks()) {
        throw ParameterError("row permutation size " + std::to_string(row_perm.size()) +
                             " does not match " + std::to_string(layout.n_row_blocks()) +
                             " block rows");
    }
    if (col_perm.size() != layout.n_col_blocks()) {
        throw ParameterError("column permutation size " + std::to_string(col_perm.size()) +
                             " does not match " + std::to_string(layout.n_col_blocks()) +
                             " block columns");
    }

    const std::size_t q = grid.side();
    DistMatrix dm{grid, std::move(row_perm), std::move(col_perm), layout, {}};

    std::vector<std::vector<Triplet>> per_rank(grid.ranks());
    for (std::size_t i = 0; i < layout.n_row_blocks(); ++i) {
        const std::size_t pr = dm.row_perm.apply(i);
        for (std::size_t e = m.row_ptr()[i]; e < m.row_ptr()[i + 1]; ++e) {
            const std::size_t pc = dm.col_perm.apply(m.col_idx()[e]);
            const std::size_t rank = grid.rank_of(pr % q, pc % q);
            const auto block = m.block(e);
            per_rank[rank].push_back(
                Triplet{pr / q, pc / q, std::vector<double>(block.begin(), block.end())});
        }
    }

    dm.shards.reserve(grid.ranks());
    for (std::size_t rank = 0; rank < grid.ranks(); ++rank) {
        const BlockLayout local =
            local_layout_for_rank(layout, dm.row_perm, dm.col_perm, grid, rank);
        dm.shards.push_back(BlockCsr::build_from_triplets(local, per_rank[rank]));
    }
    return dm;
}

DistMatrix distribute(const BlockCsr& m, const ProcessGrid& grid, std::uint64_t seed) {
    const std::size_t rows = m.layout().n_row_blocks();
    const std::size_t cols = m.layout().n_col_blocks();
    // A 1x1 grid keeps the identity so the degenerate path is bit-identical
    // to the undistributed multiply.
    Permutation row_perm = (grid.side() == 1 || rows == 0)
                               ? Permutation::identity(rows)
                               : random_permutation(rows, seed);
    Permutation col_perm = (grid.side() == 1 || cols == 0)
                               ? Permutation::identity(cols)
                               : random_permutation(cols, seed + 1);
    return distribute_with_perms(m, grid, std::move(row_perm), std::move(col_perm));
}

BlockCsr gather(const DistMatrix& dm) {
    struct Entry {
        std::size_t row;
        std::size_t col;
        std::size_t rank;
        std::size_t block;
    };
    std::vector<Entry> entries;
    for (std::size_t rank = 0; rank < dm.shards.size(); ++rank) {
        const BlockCsr& shard = dm.shards[rank];
        for (std::size_t lr = 0; lr < shard.layout().n_row_blocks(); ++lr) {
            const std::size_t row = dm.global_row_of(rank, lr);
            for (std::size_t e = shard.row_ptr()[lr]; e < shard.row_ptr()[lr + 1]; ++e) {
                entries.push_back(
                    {row, dm.global_col_of(rank, shard.col_idx()[e]), rank, e});
            }
        }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
        return std::tie(x.row, x.col) < std::tie(y.row, y.col);
    });
    BlockCsrBuilder builder(dm.global_layout);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0 && entries[i].row == entries[i - 1].row &&
            entries[i].col == entries[i - 1].col) {
            throw IntegrityError("overlapping shards: block (" +
                                 std::to_string(entries[i].row) + ", " +
                                 std::to_string(entries[i].col) +
                                 ") stored on ranks " +
                                 std::to_string(entries[i - 1].rank) + " and " +
                                 std::to_string(entries[i].rank));
        }
        builder.append(entries[i].row, entries[i].col,
                       dm.shards[entries[i].rank].block(entries[i].block));
    }
    return builder.finish();
}

namespace {

constexpr int kTagAlignA = 0;
constexpr int kTagAlignB = 1;
int tag_a(std::size_t step) { return static_cast<int>(2 * step + 2); }
int tag_b(std::size_t step) { return static_cast<int>(2 * step + 3); }

struct RankTask {
    // inputs
    const DistMatrix* a = nullptr;
    const DistMatrix* b = nullptr;
    ChannelTransport* transport = nullptr;
    std::size_t rank = 0;
    MultiplyOptions options;
    BlockLayout c_layout;

    // outputs
    BlockCsr c_shard;
    CommStats comm;
    std::uint64_t flops = 0;
    std::uint64_t executed = 0;
    std::uint64_t skipped = 0;
    std::exception_ptr failure;

    void run() noexcept {
        try {
            execute();
        } catch (...) {
            failure = std::current_exception();
        }
    }

    void execute() {
        const auto t0 = std::chrono::steady_clock::now();
        const ProcessGrid& grid = a->grid;
        const std::size_t q = grid.side();
        const std::size_t r = grid.row_of(rank);
        const std::size_t c = grid.col_of(rank);
        comm.rank = rank;

        BlockCsr a_cur = a->shards[rank];
        BlockCsr b_cur = b->shards[rank];

        // Alignment: this rank multiplies A(r, (c+r) mod q) first, so its own
        // A shard goes to the rank that starts with it, and likewise for B.
        // A zero shift (r == 0 for A, c == 0 for B) stays local and moves no
        // bytes.
        {
            std::vector<TransferHandle> pending;
            const std::size_t a_src_col = (c + r) % q;
            const std::size_t b_src_row = (r + c) % q;
            if (a_src_col != c) {
                pending.push_back(
                    transport->recv(grid.rank_of(r, a_src_col), rank, kTagAlignA));
            }
            if (b_src_row != r) {
                pending.push_back(
                    transport->recv(grid.rank_of(b_src_row, c), rank, kTagAlignB));
            }
            if (a_src_col != c) {
                const std::size_t a_dst_col = (c + q - r % q) % q;
                std::vector<std::byte> bytes = serialize_body(a_cur);
                comm.bytes_sent += bytes.size();
                transport->send(rank, grid.rank_of(r, a_dst_col), kTagAlignA,
                                std::move(bytes));
            }
            if (b_src_row != r) {
                const std::size_t b_dst_row = (r + q - c % q) % q;
                std::vector<std::byte> bytes = serialize_body(b_cur);
                comm.bytes_sent += bytes.size();
                transport->send(rank, grid.rank_of(b_dst_row, c), kTagAlignB,
                                std::move(bytes));
            }
            comm.waitall_seconds += waitall(pending);
            std::size_t next = 0;
            if (a_src_col != c) {
                comm.bytes_received += pending[next].byte_count();
                a_cur = parse_body(pending[next].take_payload());
                ++next;
            }
            if (b_src_row != r) {
                comm.bytes_received += pending[next].byte_count();
                b_cur = parse_body(pending[next].take_payload());
            }
        }

        // C shard accumulator; element-wise adds happen in step order, so the
        // result bits depend only on the schedule, not on timing.
        std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> acc;

        for (std::size_t step = 0; step < q; ++step) {
            std::vector<TransferHandle> incoming;
            if (step + 1 < q) {
                const std::size_t right = grid.rank_of(r, (c + 1) % q);
                const std::size_t below = grid.rank_of((r + 1) % q, c);
                incoming.push_back(transport->recv(right, rank, tag_a(step + 1)));
                incoming.push_back(transport->recv(below, rank, tag_b(step + 1)));

                const std::size_t left = grid.rank_of(r, (c + q - 1) % q);
                const std::size_t above = grid.rank_of((r + q - 1) % q, c);
                std::vector<std::byte> a_bytes = serialize_body(a_cur);
                comm.bytes_sent += a_bytes.size();
                transport->send(rank, left, tag_a(step + 1), std::move(a_bytes));
                std::vector<std::byte> b_bytes = serialize_body(b_cur);
                comm.bytes_sent += b_bytes.size();
                transport->send(rank, above, tag_b(step + 1), std::move(b_bytes));
            }

            auto [partial, stats] = multiply_local(a_cur, b_cur, options);
            comm.batch_seconds += stats.total_seconds;
            flops += stats.flops;
            executed += stats.executed;
            skipped += stats.skipped;
            for (std::size_t lr = 0; lr < partial.layout().n_row_blocks(); ++lr) {
                for (std::size_t e = partial.row_ptr()[lr]; e < partial.row_ptr()[lr + 1];
                     ++e) {
                    const auto block = partial.block(e);
                    auto [it, inserted] = acc.try_emplace(
                        std::make_pair(lr, partial.col_idx()[e]),
                        block.begin(), block.end());
                    if (!inserted) {
                        std::vector<double>& dst = it->second;
                        for (std::size_t v = 0; v < dst.size(); ++v) {
                            dst[v] += block[v];
                        }
                    }
                }
            }

            if (step + 1 < q) {
                comm.waitall_seconds += waitall(incoming);
                comm.bytes_received += incoming[0].byte_count();
                comm.bytes_received += incoming[1].byte_count();
                a_cur = parse_body(incoming[0].take_payload());
                b_cur = parse_body(incoming[1].take_payload());
            }
        }

        BlockCsrBuilder builder(c_layout);
        for (const auto& [coord, values] : acc) {
            builder.append(coord.first, coord.second, values);
        }
        c_shard = builder.finish();

        comm.total_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        comm.other_seconds =
            std::max(0.0, comm.total_seconds - comm.waitall_seconds - comm.batch_seconds);
    }
};

}  // namespace

CannonResult cannon_multiply(const DistMatrix& a, const DistMatrix& b, double eps,
                             std::size_t workers, std::size_t batch_capacity) {
    if (!(a.grid == b.grid)) {
        throw ParameterError("operands live on different process grids");
    }
    if (a.global_layout.col_block_sizes() != b.global_layout.row_block_sizes()) {
        throw ParameterError("inner layouts disagree between the operands");
    }
    if (!(a.col_perm == b.row_perm)) {
        throw ParameterError(
            "inner permutations disagree; distribute a and b so that a's column "
            "permutation equals b's row permutation");
    }
    if (std::isnan(eps) || eps < 0.0) {
        throw ParameterError("filter threshold must be >= 0");
    }
    if (workers < 1 || batch_capacity < 1) {
        throw ParameterError("workers and batch_capacity must be >= 1");
    }

    const ProcessGrid& grid = a.grid;
    ChannelTransport transport(grid.ranks());

    CannonResult result;
    result.c.grid = grid;
    result.c.row_perm = a.row_perm;
    result.c.col_perm = b.col_perm;
    result.c.global_layout =
        BlockLayout(a.global_layout.row_block_sizes(), b.global_layout.col_block_sizes());

    std::vector<RankTask> tasks(grid.ranks());
    for (std::size_t rank = 0; rank < grid.ranks(); ++rank) {
        tasks[rank].a = &a;
        tasks[rank].b = &b;
        tasks[rank].transport = &transport;
        tasks[rank].rank = rank;
        tasks[rank].options.eps = eps;
        tasks[rank].options.workers = workers;
        tasks[rank].options.batch_capacity = batch_capacity;
        tasks[rank].c_layout = local_layout_for_rank(result.c.global_layout,
                                                     result.c.row_perm,
                                                     result.c.col_perm, grid, rank);
    }

    std::vector<std::thread> threads;
    threads.reserve(grid.ranks());
    for (RankTask& task : tasks) {
        threads.emplace_back(&RankTask::run, &task);
    }
    for (std::thread& t : threads) t.join();
    for (RankTask& task : tasks) {
        if (task.failure) std::rethrow_exception(task.failure);
    }

    result.c.shards.reserve(grid.ranks());
    for (RankTask& task : tasks) {
        result.c.shards.push_back(std::move(task.c_shard));
        result.comm.push_back(task.comm);
        result.flops += task.flops;
        result.executed += task.executed;
        result.skipped += task.skipped;
    }
    return result;
}

ProcessGrid grid_for_ranks(std::size_t ranks) {
    if (ranks < 1) {
        throw ParameterError("rank count must be >= 1");
    }
    const auto q = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(ranks))));
    if (q * q != ranks) {
        throw ParameterError("rank count " + std::to_string(ranks) +
                             " is not a perfect square; the grid is q x q");
    }
    return ProcessGrid(q);
}

}  // namespace bsmm
