#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bsmm/block_csr.hpp"

namespace bsmm {

/// One benchmark matrix family: block sizes, full-scale block-row count,
/// target occupancy, multiplication chain length, and the banded value
/// model (band half-width in block units, norm decay rate per block of
/// distance).
struct BenchPreset {
    std::string name;
    std::vector<std::size_t> block_sizes;
    std::size_t full_block_rows = 0;
    double occupancy = 0.0;
    std::size_t chain_length = 1;
    std::size_t band_half_width = 0;
    double norm_decay = 0.0;
};

/// The three canonical presets: "s-e", "h2o-dft-ls", "amorph".
std::span<const BenchPreset> all_presets();
const BenchPreset& preset_by_name(std::string_view name);

/// Deterministic banded block-sparse generator. The matrix is square with
/// round(scale * full_block_rows) block rows (at least 4). The diagonal band
/// of the preset's half-width is always stored; off-band blocks appear with
/// the probability that brings expected occupancy to the preset target.
/// Block values are scaled so the Frobenius norm of the block at distance d
/// from the diagonal is exp(-norm_decay * d), floored at 1e-30.
BlockCsr generate(const BenchPreset& preset, double scale, std::uint64_t seed);

/// Stored blocks over total block positions.
double occupancy(const BlockCsr& m);

/// Unstructured random matrix for property tests: every position stored
/// independently with the given probability, block edge lengths drawn
/// uniformly from size_choices, values uniform in [-1, 1].
BlockCsr random_uniform(std::size_t block_rows, std::size_t block_cols,
                        std::span<const std::size_t> size_choices, double occupancy,
                        std::uint64_t seed);

}  // namespace bsmm
