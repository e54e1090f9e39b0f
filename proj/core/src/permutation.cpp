#include "bsmm/permutation.hpp"

#include <numeric>
#include <random>

#include "bsmm/rng.hpp"

namespace bsmm {

Permutation::Permutation(std::vector<std::size_t> forward, std::uint64_t seed)
    : forward_(std::move(forward)), seed_(seed) {
    inverse_.assign(forward_.size(), forward_.size());
    for (std::size_t i = 0; i < forward_.size(); ++i) {
        const std::size_t f = forward_[i];
        if (f >= forward_.size() || inverse_[f] != forward_.size()) {
            throw ParameterError("Permutation: forward map is not a bijection on 0.." +
                                 std::to_string(forward_.size()) + "-1");
        }
        inverse_[f] = i;
    }
}

Permutation Permutation::identity(std::size_t n) {
    std::vector<std::size_t> fwd(n);
    std::iota(fwd.begin(), fwd.end(), std::size_t{0});
    return Permutation(std::move(fwd), 0);
}

bool Permutation::is_identity() const noexcept {
    for (std::size_t i = 0; i < forward_.size(); ++i) {
        if (forward_[i] != i) return false;
    }
    return true;
}

Permutation random_permutation(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ParameterError("random_permutation: n must be >= 1");
    std::vector<std::size_t> fwd(n);
    std::iota(fwd.begin(), fwd.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = uniform_below(rng, i + 1);
        std::swap(fwd[i], fwd[j]);
    }
    return Permutation(std::move(fwd), seed);
}

}  // namespace bsmm
