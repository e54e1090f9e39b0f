#pragma once

#include <cstddef>

#include "bsmm/errors.hpp"

namespace bsmm {

/// Square q x q grid of simulated ranks, row-major rank ids.
class ProcessGrid {
public:
    explicit ProcessGrid(std::size_t q) : q_(q) {
        if (q < 1) {
            throw ParameterError("process grid side must be >= 1");
        }
    }

    std::size_t side() const noexcept { return q_; }
    std::size_t ranks() const noexcept { return q_ * q_; }

    std::size_t rank_of(std::size_t row, std::size_t col) const noexcept {
        return row * q_ + col;
    }
    std::size_t row_of(std::size_t rank) const noexcept { return rank / q_; }
    std::size_t col_of(std::size_t rank) const noexcept { return rank % q_; }

    bool operator==(const ProcessGrid&) const = default;

private:
    std::size_t q_;
};

/// Grid for a requested rank count; only perfect squares are representable.
ProcessGrid grid_for_ranks(std::size_t ranks);

}  // namespace bsmm
