#pragma once

#include <cstdint>
#include <vector>

#include "bsmm/block_csr.hpp"
#include "bsmm/local_mm.hpp"
#include "bsmm/permutation.hpp"
#include "bsmm/process_grid.hpp"

namespace bsmm {

/// A block matrix spread over a q x q rank grid: block (i, j) lives on rank
/// (row_perm[i] mod q, col_perm[j] mod q) at local coordinates
/// (row_perm[i] div q, col_perm[j] div q). The permutations plus the grid
/// are the local<->global index map.
struct DistMatrix {
    ProcessGrid grid{1};
    Permutation row_perm;
    Permutation col_perm;
    BlockLayout global_layout;
    std::vector<BlockCsr> shards;  // one per rank, rank-major

    std::size_t global_row_of(std::size_t rank, std::size_t local_row) const {
        return row_perm.apply_inverse(local_row * grid.side() + grid.row_of(rank));
    }
    std::size_t global_col_of(std::size_t rank, std::size_t local_col) const {
        return col_perm.apply_inverse(local_col * grid.side() + grid.col_of(rank));
    }
};

/// Per-rank communication accounting for one distributed multiply. The time
/// decomposition is exact by construction: other_seconds is the remainder
/// total - waitall - batch.
struct CommStats {
    std::size_t rank = 0;
    std::uint64_t bytes_sent = 0;
    std::uint64_t bytes_received = 0;
    double waitall_seconds = 0.0;
    double batch_seconds = 0.0;
    double other_seconds = 0.0;
    double total_seconds = 0.0;
};

/// Routes blocks per the DistMatrix invariant under random row/column
/// permutations drawn from (seed, seed + 1). A 1x1 grid keeps identity
/// permutations so the single shard preserves the input ordering exactly.
DistMatrix distribute(const BlockCsr& m, const ProcessGrid& grid, std::uint64_t seed);

/// Same routing under caller-supplied permutations (test hook).
DistMatrix distribute_with_perms(const BlockCsr& m, const ProcessGrid& grid,
                                 Permutation row_perm, Permutation col_perm);

/// Inverse-permuted union of the shards. Overlapping shards indicate
/// corruption and raise IntegrityError.
BlockCsr gather(const DistMatrix& dm);

struct CannonResult {
    DistMatrix c;
    std::vector<CommStats> comm;       // one entry per rank
    std::uint64_t flops = 0;           // aggregated over ranks and steps
    std::uint64_t executed = 0;
    std::uint64_t skipped = 0;
};

/// Stationary-C Cannon multiply: an alignment exchange, then q iterations
/// of (post receives, post buffered sends, local multiply on the current
/// panels, waitall on the incoming panels). Only A and B panels ever move;
/// waitall_seconds records just the non-overlapped communication remainder.
/// Requires both operands on the same grid with a.col_perm == b.row_perm
/// (distribute A and B so the inner permutations match).
CannonResult cannon_multiply(const DistMatrix& a, const DistMatrix& b, double eps,
                             std::size_t workers = 1, std::size_t batch_capacity = 1024);

}  // namespace bsmm
