#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "bsmm/errors.hpp"

namespace bsmm {

/// Block partitioning of a matrix: a list of block heights for the rows and
/// block widths for the columns, with cached element offsets.
class BlockLayout {
public:
    BlockLayout() = default;

    BlockLayout(std::vector<std::size_t> row_block_sizes,
                std::vector<std::size_t> col_block_sizes)
        : row_sizes_(std::move(row_block_sizes)),
          col_sizes_(std::move(col_block_sizes)) {
        row_offsets_ = prefix_sums(row_sizes_, "row");
        col_offsets_ = prefix_sums(col_sizes_, "col");
    }

    std::size_t n_row_blocks() const noexcept { return row_sizes_.size(); }
    std::size_t n_col_blocks() const noexcept { return col_sizes_.size(); }

    std::size_t row_size(std::size_t block_row) const { return row_sizes_[block_row]; }
    std::size_t col_size(std::size_t block_col) const { return col_sizes_[block_col]; }

    /// Element offset of the first row of a block row. Valid for
    /// block_row in [0, n_row_blocks()].
    std::size_t row_offset(std::size_t block_row) const { return row_offsets_[block_row]; }
    std::size_t col_offset(std::size_t block_col) const { return col_offsets_[block_col]; }

    std::size_t total_rows() const noexcept { return row_offsets_.empty() ? 0 : row_offsets_.back(); }
    std::size_t total_cols() const noexcept { return col_offsets_.empty() ? 0 : col_offsets_.back(); }

    const std::vector<std::size_t>& row_block_sizes() const noexcept { return row_sizes_; }
    const std::vector<std::size_t>& col_block_sizes() const noexcept { return col_sizes_; }

    bool operator==(const BlockLayout& other) const noexcept {
        return row_sizes_ == other.row_sizes_ && col_sizes_ == other.col_sizes_;
    }

private:
    static std::vector<std::size_t> prefix_sums(const std::vector<std::size_t>& sizes,
                                                const char* which) {
        std::vector<std::size_t> offsets(sizes.size() + 1, 0);
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            if (sizes[i] == 0) {
                throw ParameterError(std::string("block layout: ") + which + " block " +
                                     std::to_string(i) + " has size 0");
            }
            offsets[i + 1] = offsets[i] + sizes[i];
        }
        return offsets;
    }

    std::vector<std::size_t> row_sizes_;
    std::vector<std::size_t> col_sizes_;
    std::vector<std::size_t> row_offsets_;
    std::vector<std::size_t> col_offsets_;
};

}  // namespace bsmm
