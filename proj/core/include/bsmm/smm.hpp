#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

namespace bsmm {

/// Dimensions of one multiply-accumulate: A is m x k, B is k x n, C is m x n,
/// all column-major.
struct KernelKey {
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t k = 0;

    bool operator==(const KernelKey&) const = default;
    bool operator<(const KernelKey& o) const {
        if (m != o.m) return m < o.m;
        if (n != o.n) return n < o.n;
        return k < o.k;
    }
};

struct KernelKeyHash {
    std::size_t operator()(const KernelKey& key) const noexcept {
        std::size_t h = std::hash<std::size_t>{}(key.m);
        h = h * 0x9e3779b97f4a7c15ull + std::hash<std::size_t>{}(key.n);
        h = h * 0x9e3779b97f4a7c15ull + std::hash<std::size_t>{}(key.k);
        return h;
    }
};

/// Kernel contract: c += a * b, where the per-element accumulation runs over
/// the shared dimension in ascending order starting from the prior c value.
/// Every kernel in the table follows it, which is what makes specialized and
/// generic results bit-identical.
using KernelFn = void (*)(const double* a, const double* b, double* c,
                          std::size_t m, std::size_t n, std::size_t k);

struct Kernel {
    KernelFn fn = nullptr;
    bool specialized = false;
};

/// Upper bound on each dimension for the generic path.
inline constexpr std::size_t kMaxKernelDim = 128;

/// Block edge lengths covered by ahead-of-time specializations; the table
/// holds one fixed-size kernel per (m, n, k) triple from this set.
std::span<const std::size_t> specialized_edge_sizes();

class KernelTable {
public:
    /// Generic-only table.
    KernelTable() = default;

    /// Table with fixed-size kernels for every (m, n, k) in
    /// specialized_edge_sizes() cubed.
    static const KernelTable& with_default_specializations();

    void register_kernel(KernelKey key, KernelFn fn);

    /// Total dispatch: the specialized kernel when one is registered for the
    /// key, the generic fallback otherwise.
    Kernel dispatch(KernelKey key) const;

    const std::vector<KernelKey>& specialized_keys() const noexcept { return keys_; }

private:
    std::unordered_map<KernelKey, KernelFn, KernelKeyHash> map_;
    std::vector<KernelKey> keys_;
};

/// The fallback kernel, exposed so tests can compare dispatched output
/// against it directly.
void generic_gemm_acc(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t n, std::size_t k);

/// Validated entry point: checks key range ([1, 128] per dimension) and
/// buffer lengths, then runs the dispatched kernel.
void gemm_acc(KernelKey key, std::span<const double> a, std::span<const double> b,
              std::span<double> c,
              const KernelTable& table = KernelTable::with_default_specializations());

/// Geometric mean of strictly positive values.
double geometric_mean(std::span<const double> values);

namespace detail {
/// Registers the generated fixed-size kernels; defined in the generated
/// table translation unit.
void register_default_specializations(KernelTable& table);
}  // namespace detail

}  // namespace bsmm
