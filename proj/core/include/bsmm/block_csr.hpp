#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bsmm/block_layout.hpp"
#include "bsmm/errors.hpp"

namespace bsmm {

/// Dense matrix in row-major element order. Conversion target for oracles
/// and verification; not used on any hot path.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// One block assembly entry: a dense block destined for a block coordinate.
/// Values are column-major within the block.
struct Triplet {
    std::size_t block_row = 0;
    std::size_t block_col = 0;
    std::vector<double> values;
};

/// Frobenius norm of a dense block (any shape).
double frobenius_norm(std::span<const double> values);

/// Block-sparse matrix in blocked CSR form: stored entries are dense blocks,
/// column-major within each block, concatenated in CSR order. Each stored
/// block carries its Frobenius norm. Immutable after construction.
class BlockCsr {
public:
    BlockCsr() = default;

    /// Assembles a matrix from (block_row, block_col, values) entries.
    /// Duplicate coordinates are summed in entry order. Blocks with
    /// exactly-zero content are kept.
    static BlockCsr build_from_triplets(const BlockLayout& layout,
                                        std::span<const Triplet> entries);

    const BlockLayout& layout() const noexcept { return layout_; }
    std::size_t n_blocks() const noexcept { return col_idx_.size(); }

    const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
    const std::vector<std::size_t>& col_idx() const noexcept { return col_idx_; }
    const std::vector<std::size_t>& block_offsets() const noexcept { return block_offsets_; }
    const std::vector<double>& block_data() const noexcept { return block_data_; }
    const std::vector<double>& norms() const noexcept { return norms_; }

    /// Block row containing stored block index b (only used off the hot path).
    std::size_t block_row_of(std::size_t b) const;

    std::span<const double> block(std::size_t b) const {
        const std::size_t end = (b + 1 < block_offsets_.size()) ? block_offsets_[b + 1]
                                                                : block_data_.size();
        return {block_data_.data() + block_offsets_[b], end - block_offsets_[b]};
    }

    /// Stored-block index at (block_row, block_col), if present.
    std::optional<std::size_t> find_block(std::size_t block_row, std::size_t block_col) const;

    /// Checks every structural invariant (row_ptr monotonicity, sorted
    /// unique column indices, data extents, norm consistency). Throws
    /// IntegrityError on the first violation.
    void validate() const;

    DenseMatrix to_dense() const;

    /// Keeps exactly the blocks whose norm is strictly greater than eps.
    BlockCsr filter(double eps) const;

    /// Structural and bitwise value equality (norms included).
    bool bit_identical(const BlockCsr& other) const;

private:
    BlockLayout layout_;
    std::vector<std::size_t> row_ptr_;        // n_row_blocks + 1
    std::vector<std::size_t> col_idx_;        // per stored block
    std::vector<std::size_t> block_offsets_;  // start of each block in block_data_
    std::vector<double> block_data_;          // column-major per block
    std::vector<double> norms_;               // Frobenius norm per stored block

    friend class BlockCsrBuilder;
};

/// Incremental CSR assembler for callers that already produce blocks in
/// row-major block order (row by row, strictly increasing columns within a
/// row). Avoids the triplet detour on hot paths.
class BlockCsrBuilder {
public:
    explicit BlockCsrBuilder(BlockLayout layout);

    /// Appends a block; (block_row, block_col) must advance in CSR order.
    void append(std::size_t block_row, std::size_t block_col, std::span<const double> values);

    BlockCsr finish();

private:
    BlockCsr m_;
    std::size_t current_row_ = 0;
    bool finished_ = false;
};

/// filter_blocks per the engine contract: strict inequality, eps must be
/// non-negative.
BlockCsr filter_blocks(const BlockCsr& m, double eps);

}  // namespace bsmm
