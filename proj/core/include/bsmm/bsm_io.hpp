#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "bsmm/block_csr.hpp"

namespace bsmm {

/// BSM1 on-disk format, little-endian:
///   magic "BSM1" (4 bytes), u32 version = 1,
///   u64 n_row_blocks, u64 n_col_blocks, u64 n_blocks,
///   row_block_sizes (u32 each), col_block_sizes (u32 each),
///   row_ptr (u64 x n_row_blocks+1), col_idx (u64 x n_blocks),
///   block element data (f64, column-major per block, CSR order).
/// Norms are recomputed on load, not stored.

void write_bsm(const BlockCsr& m, std::ostream& out);
void write_bsm(const BlockCsr& m, const std::filesystem::path& path);

BlockCsr read_bsm(std::istream& in);
BlockCsr read_bsm(const std::filesystem::path& path);

/// Header-less body encoding, used for matrix panels in transit. Identical
/// to the file format minus magic and version.
std::vector<std::byte> serialize_body(const BlockCsr& m);
BlockCsr parse_body(std::span<const std::byte> bytes);

}  // namespace bsmm
