#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bsmm/errors.hpp"

namespace bsmm {

/// A bijection on 0..n-1 with its inverse and the seed it was drawn from.
class Permutation {
public:
    Permutation() = default;

    /// Wraps an explicit forward map (test hook / identity construction).
    explicit Permutation(std::vector<std::size_t> forward, std::uint64_t seed = 0);

    static Permutation identity(std::size_t n);

    std::size_t size() const noexcept { return forward_.size(); }
    std::uint64_t seed() const noexcept { return seed_; }

    std::size_t apply(std::size_t i) const { return forward_[i]; }
    std::size_t apply_inverse(std::size_t i) const { return inverse_[i]; }

    const std::vector<std::size_t>& forward() const noexcept { return forward_; }
    const std::vector<std::size_t>& inverse() const noexcept { return inverse_; }

    bool is_identity() const noexcept;

    bool operator==(const Permutation& other) const noexcept {
        return forward_ == other.forward_;
    }

private:
    std::vector<std::size_t> forward_;
    std::vector<std::size_t> inverse_;
    std::uint64_t seed_ = 0;
};

/// Uniform random permutation of 0..n-1 from a seeded deterministic
/// generator (Fisher-Yates over mt19937_64 with rejection sampling, so the
/// result depends only on (n, seed)).
Permutation random_permutation(std::size_t n, std::uint64_t seed);

}  // namespace bsmm
