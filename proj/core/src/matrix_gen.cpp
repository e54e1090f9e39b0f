#include "bsmm/matrix_gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bsmm/errors.hpp"
#include "bsmm/rng.hpp"

namespace bsmm {
namespace {

// Norm floor: keeps far-off-band block norms representable instead of
// underflowing to denormals or zero.
constexpr double kNormFloor = 1e-30;

const std::vector<BenchPreset>& presets() {
    static const std::vector<BenchPreset> p = {
        // name, block sizes, full-scale block rows, occupancy, chain,
        // band half-width, norm decay per block of distance
        {"s-e", {6}, 186624, 5e-4, 618, 0, 0.5},
        {"h2o-dft-ls", {23}, 6912, 0.10, 193, 2, 0.6},
        {"amorph", {5, 13}, 15690, 0.55, 187, 3, 0.3},
    };
    return p;
}

/// Appends the indices of [0, n) kept by an independent Bernoulli(p) draw,
/// ascending, using geometric gap skipping (O(kept), not O(n)).
void bernoulli_indices(std::mt19937_64& rng, std::size_t n, double p,
                       std::vector<std::size_t>& out) {
    if (n == 0 || p <= 0.0) return;
    if (p >= 1.0) {
        for (std::size_t i = 0; i < n; ++i) out.push_back(i);
        return;
    }
    const double denom = std::log1p(-p);
    std::size_t i = 0;
    while (true) {
        const double u = 1.0 - uniform_unit(rng);  // (0, 1]
        const double gap = std::floor(std::log(u) / denom);
        if (gap >= static_cast<double>(n)) return;
        i += static_cast<std::size_t>(gap);
        if (i >= n) return;
        out.push_back(i);
        ++i;
    }
}

/// Fills a block with uniform values rescaled to an exact Frobenius norm.
void fill_block(std::mt19937_64& rng, std::size_t elems, double target_norm,
                std::vector<double>& values) {
    values.resize(elems);
    for (double& v : values) v = uniform_pm1(rng);
    const double f = frobenius_norm(values);
    if (f == 0.0) {
        values[0] = target_norm;
        return;
    }
    const double s = target_norm / f;
    for (double& v : values) v *= s;
}

void validate_preset(const BenchPreset& preset) {
    if (!(preset.occupancy > 0.0) || preset.occupancy > 1.0) {
        throw ParameterError("preset occupancy must be in (0, 1]");
    }
    if (preset.block_sizes.empty()) {
        throw ParameterError("preset needs at least one block size");
    }
    for (std::size_t s : preset.block_sizes) {
        if (s == 0) throw ParameterError("preset block sizes must be >= 1");
    }
    if (preset.chain_length < 1) {
        throw ParameterError("preset chain length must be >= 1");
    }
}

}  // namespace

std::span<const BenchPreset> all_presets() { return presets(); }

const BenchPreset& preset_by_name(std::string_view name) {
    for (const BenchPreset& p : presets()) {
        if (p.name == name) return p;
    }
    std::string known;
    for (const BenchPreset& p : presets()) {
        if (!known.empty()) known += ", ";
        known += p.name;
    }
    throw ParameterError("unknown preset \"" + std::string(name) + "\" (known: " + known +
                         ")");
}

BlockCsr generate(const BenchPreset& preset, double scale, std::uint64_t seed) {
    validate_preset(preset);
    if (std::isnan(scale) || !(scale > 0.0) || scale > 1.0) {
        throw ParameterError("scale must be in (0, 1]");
    }
    const auto n = static_cast<std::size_t>(
        std::llround(scale * static_cast<double>(preset.full_block_rows)));
    if (n < 4) {
        throw ParameterError("scaled block-row count " + std::to_string(n) +
                             " is below the minimum of 4");
    }

    // The layout is a function of (preset, n) alone: two matrices generated
    // at the same scale always conform, whatever their content seeds, which
    // chain multiplication requires.
    std::vector<std::size_t> sizes(n);
    if (preset.block_sizes.size() == 1) {
        std::fill(sizes.begin(), sizes.end(), preset.block_sizes[0]);
    } else {
        std::mt19937_64 size_rng(mix_seed(0xb10c, n));
        for (std::size_t i = 0; i < n; ++i) {
            sizes[i] = preset.block_sizes[uniform_below(size_rng, preset.block_sizes.size())];
        }
    }
    const BlockLayout layout(sizes, sizes);

    const std::size_t w = preset.band_half_width;
    std::size_t band_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= w ? i - w : 0;
        const std::size_t hi = std::min(n - 1, i + w);
        band_count += hi - lo + 1;
    }
    const double positions = static_cast<double>(n) * static_cast<double>(n);
    const double off_positions = positions - static_cast<double>(band_count);
    double p_off = 0.0;
    if (off_positions > 0.0) {
        p_off = (preset.occupancy * positions - static_cast<double>(band_count)) /
                off_positions;
        p_off = std::clamp(p_off, 0.0, 1.0);
    }

    BlockCsrBuilder builder(layout);
    std::vector<std::size_t> cols;
    std::vector<std::size_t> off;
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) {
        std::mt19937_64 rng(mix_seed(seed, i));
        const std::size_t lo = i >= w ? i - w : 0;
        const std::size_t hi = std::min(n - 1, i + w);
        const std::size_t band_len = hi - lo + 1;

        off.clear();
        bernoulli_indices(rng, n - band_len, p_off, off);
        cols.clear();
        std::size_t t = 0;
        for (; t < off.size() && off[t] < lo; ++t) cols.push_back(off[t]);
        for (std::size_t j = lo; j <= hi; ++j) cols.push_back(j);
        for (; t < off.size(); ++t) cols.push_back(off[t] + band_len);

        for (std::size_t j : cols) {
            const double d = static_cast<double>(i > j ? i - j : j - i);
            const double target = std::max(std::exp(-preset.norm_decay * d), kNormFloor);
            fill_block(rng, layout.row_size(i) * layout.col_size(j), target, values);
            builder.append(i, j, values);
        }
    }
    return builder.finish();
}

double occupancy(const BlockCsr& m) {
    const double positions = static_cast<double>(m.layout().n_row_blocks()) *
                             static_cast<double>(m.layout().n_col_blocks());
    if (positions == 0.0) return 0.0;
    return static_cast<double>(m.n_blocks()) / positions;
}

BlockCsr random_uniform(std::size_t block_rows, std::size_t block_cols,
                        std::span<const std::size_t> size_choices, double occupancy,
                        std::uint64_t seed) {
    if (std::isnan(occupancy) || !(occupancy > 0.0) || occupancy > 1.0) {
        throw ParameterError("occupancy must be in (0, 1]");
    }
    if (size_choices.empty()) {
        throw ParameterError("need at least one block size choice");
    }
    for (std::size_t s : size_choices) {
        if (s == 0) throw ParameterError("block sizes must be >= 1");
    }

    std::mt19937_64 row_rng(mix_seed(seed, 0x526f77));
    std::vector<std::size_t> row_sizes(block_rows);
    for (auto& s : row_sizes) s = size_choices[uniform_below(row_rng, size_choices.size())];
    std::mt19937_64 col_rng(mix_seed(seed, 0x436f6c));
    std::vector<std::size_t> col_sizes(block_cols);
    for (auto& s : col_sizes) s = size_choices[uniform_below(col_rng, size_choices.size())];
    const BlockLayout layout(row_sizes, col_sizes);

    BlockCsrBuilder builder(layout);
    std::vector<std::size_t> cols;
    std::vector<double> values;
    for (std::size_t i = 0; i < block_rows; ++i) {
        std::mt19937_64 rng(mix_seed(seed ^ 0x756e69666f726dull, i));
        cols.clear();
        bernoulli_indices(rng, block_cols, occupancy, cols);
        for (std::size_t j : cols) {
            values.resize(layout.row_size(i) * layout.col_size(j));
            for (double& v : values) v = uniform_pm1(rng);
            builder.append(i, j, values);
        }
    }
    return builder.finish();
}

}  // namespace bsmm
