#include "bsmm/block_csr.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <utility>

namespace bsmm {

double frobenius_norm(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

BlockCsr BlockCsr::build_from_triplets(const BlockLayout& layout,
                                       std::span<const Triplet> entries) {
    // Accumulate in an ordered map; duplicates are summed in entry order.
    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> acc;
    for (const Triplet& t : entries) {
        if (t.block_row >= layout.n_row_blocks() || t.block_col >= layout.n_col_blocks()) {
            throw ParameterError("build_from_triplets: block (" + std::to_string(t.block_row) +
                                 "," + std::to_string(t.block_col) + ") outside layout");
        }
        const std::size_t expect = layout.row_size(t.block_row) * layout.col_size(t.block_col);
        if (t.values.size() != expect) {
            throw ParameterError("build_from_triplets: block (" + std::to_string(t.block_row) +
                                 "," + std::to_string(t.block_col) + ") has " +
                                 std::to_string(t.values.size()) + " values, layout expects " +
                                 std::to_string(expect));
        }
        auto [it, inserted] = acc.try_emplace({t.block_row, t.block_col}, t.values);
        if (!inserted) {
            std::vector<double>& dst = it->second;
            for (std::size_t i = 0; i < expect; ++i) dst[i] += t.values[i];
        }
    }

    BlockCsrBuilder builder(layout);
    for (const auto& [coord, values] : acc) {
        builder.append(coord.first, coord.second, values);
    }
    return builder.finish();
}

std::size_t BlockCsr::block_row_of(std::size_t b) const {
    auto it = std::upper_bound(row_ptr_.begin(), row_ptr_.end(), b);
    return static_cast<std::size_t>(it - row_ptr_.begin()) - 1;
}

std::optional<std::size_t> BlockCsr::find_block(std::size_t block_row,
                                                std::size_t block_col) const {
    if (block_row >= layout_.n_row_blocks()) return std::nullopt;
    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[block_row]);
    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[block_row + 1]);
    const auto it = std::lower_bound(first, last, block_col);
    if (it == last || *it != block_col) return std::nullopt;
    return static_cast<std::size_t>(it - col_idx_.begin());
}

void BlockCsr::validate() const {
    const std::size_t nrb = layout_.n_row_blocks();
    if (row_ptr_.size() != nrb + 1) {
        throw IntegrityError("BlockCsr: row_ptr length " + std::to_string(row_ptr_.size()) +
                             ", expected " + std::to_string(nrb + 1));
    }
    if (row_ptr_.front() != 0 || row_ptr_.back() != n_blocks()) {
        throw IntegrityError("BlockCsr: row_ptr endpoints inconsistent with block count");
    }
    std::size_t data_len = 0;
    for (std::size_t r = 0; r < nrb; ++r) {
        if (row_ptr_[r] > row_ptr_[r + 1]) {
            throw IntegrityError("BlockCsr: row_ptr decreases at block row " + std::to_string(r));
        }
        for (std::size_t b = row_ptr_[r]; b < row_ptr_[r + 1]; ++b) {
            if (col_idx_[b] >= layout_.n_col_blocks()) {
                throw IntegrityError("BlockCsr: block " + std::to_string(b) +
                                     " column index out of range");
            }
            if (b > row_ptr_[r] && col_idx_[b] <= col_idx_[b - 1]) {
                throw IntegrityError("BlockCsr: column indices not strictly increasing in row " +
                                     std::to_string(r));
            }
            if (block_offsets_[b] != data_len) {
                throw IntegrityError("BlockCsr: block offset mismatch at block " +
                                     std::to_string(b));
            }
            data_len += layout_.row_size(r) * layout_.col_size(col_idx_[b]);
        }
    }
    if (block_data_.size() != data_len) {
        throw IntegrityError("BlockCsr: block data length " + std::to_string(block_data_.size()) +
                             ", expected " + std::to_string(data_len));
    }
    if (norms_.size() != n_blocks() || block_offsets_.size() != n_blocks()) {
        throw IntegrityError("BlockCsr: per-block array length mismatch");
    }
    for (std::size_t b = 0; b < n_blocks(); ++b) {
        const double recomputed = frobenius_norm(block(b));
        const double stored = norms_[b];
        const double scale = std::max(recomputed, stored);
        if (std::abs(recomputed - stored) > 1e-14 * scale) {
            throw IntegrityError("BlockCsr: stored norm of block " + std::to_string(b) +
                                 " disagrees with recomputation");
        }
    }
}

DenseMatrix BlockCsr::to_dense() const {
    DenseMatrix dense;
    dense.rows = layout_.total_rows();
    dense.cols = layout_.total_cols();
    dense.data.assign(dense.rows * dense.cols, 0.0);
    for (std::size_t r = 0; r < layout_.n_row_blocks(); ++r) {
        const std::size_t m = layout_.row_size(r);
        const std::size_t r0 = layout_.row_offset(r);
        for (std::size_t b = row_ptr_[r]; b < row_ptr_[r + 1]; ++b) {
            const std::size_t c = col_idx_[b];
            const std::size_t n = layout_.col_size(c);
            const std::size_t c0 = layout_.col_offset(c);
            const double* blk = block_data_.data() + block_offsets_[b];
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i < m; ++i) {
                    dense.at(r0 + i, c0 + j) = blk[i + j * m];
                }
            }
        }
    }
    return dense;
}

BlockCsr BlockCsr::filter(double eps) const {
    if (eps < 0.0 || std::isnan(eps)) {
        throw ParameterError("filter_blocks: eps must be >= 0, got " + std::to_string(eps));
    }
    BlockCsrBuilder builder(layout_);
    for (std::size_t r = 0; r < layout_.n_row_blocks(); ++r) {
        for (std::size_t b = row_ptr_[r]; b < row_ptr_[r + 1]; ++b) {
            if (norms_[b] > eps) {
                builder.append(r, col_idx_[b], block(b));
            }
        }
    }
    return builder.finish();
}

bool BlockCsr::bit_identical(const BlockCsr& other) const {
    if (!(layout_ == other.layout_) || row_ptr_ != other.row_ptr_ ||
        col_idx_ != other.col_idx_ || block_offsets_ != other.block_offsets_) {
        return false;
    }
    if (block_data_.size() != other.block_data_.size() || norms_.size() != other.norms_.size()) {
        return false;
    }
    const auto bits_equal = [](const std::vector<double>& a, const std::vector<double>& b) {
        return a.empty() ? b.empty()
                         : std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
    };
    return bits_equal(block_data_, other.block_data_) && bits_equal(norms_, other.norms_);
}

BlockCsrBuilder::BlockCsrBuilder(BlockLayout layout) {
    m_.layout_ = std::move(layout);
    m_.row_ptr_.assign(m_.layout_.n_row_blocks() + 1, 0);
}

void BlockCsrBuilder::append(std::size_t block_row, std::size_t block_col,
                             std::span<const double> values) {
    if (finished_) throw UsageError("BlockCsrBuilder: append after finish");
    if (block_row >= m_.layout_.n_row_blocks() || block_col >= m_.layout_.n_col_blocks()) {
        throw ParameterError("BlockCsrBuilder: block (" + std::to_string(block_row) + "," +
                             std::to_string(block_col) + ") outside layout");
    }
    const std::size_t expect =
        m_.layout_.row_size(block_row) * m_.layout_.col_size(block_col);
    if (values.size() != expect) {
        throw ParameterError("BlockCsrBuilder: block (" + std::to_string(block_row) + "," +
                             std::to_string(block_col) + ") has " + std::to_string(values.size()) +
                             " values, layout expects " + std::to_string(expect));
    }
    if (block_row < current_row_) {
        throw UsageError("BlockCsrBuilder: blocks must arrive in row order");
    }
    if (block_row == current_row_ && m_.row_ptr_[block_row + 1] > m_.row_ptr_[block_row] &&
        m_.col_idx_.back() >= block_col) {
        throw UsageError("BlockCsrBuilder: columns must be strictly increasing within a row");
    }
    // Close out any skipped rows.
    while (current_row_ < block_row) {
        ++current_row_;
        m_.row_ptr_[current_row_] = m_.col_idx_.size();
    }
    m_.col_idx_.push_back(block_col);
    m_.block_offsets_.push_back(m_.block_data_.size());
    m_.block_data_.insert(m_.block_data_.end(), values.begin(), values.end());
    m_.norms_.push_back(frobenius_norm(values));
    m_.row_ptr_[block_row + 1] = m_.col_idx_.size();
}

BlockCsr BlockCsrBuilder::finish() {
    if (finished_) throw UsageError("BlockCsrBuilder: finish called twice");
    finished_ = true;
    for (std::size_t r = current_row_ + 1; r < m_.row_ptr_.size(); ++r) {
        m_.row_ptr_[r] = m_.col_idx_.size();
    }
    return std::move(m_);
}

BlockCsr filter_blocks(const BlockCsr& m, double eps) { return m.filter(eps); }

}  // namespace bsmm
