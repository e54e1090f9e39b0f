#include "bsmm/smm.hpp"

#include <array>
#include <utility>

namespace bsmm {
namespace {

// Union of the benchmark preset block sizes and the nearby powers of two;
// one fixed-size kernel is generated per (m, n, k) triple from this set.
constexpr std::array<std::size_t, 10> kEdges = {4, 5, 6, 8, 9, 13, 16, 22, 23, 32};

template <std::size_t M, std::size_t N, std::size_t K>
void fixed_gemm_acc(const double* a, const double* b, double* c,
                    std::size_t /*m*/, std::size_t /*n*/, std::size_t /*k*/) {
    // Same per-element accumulation order as generic_gemm_acc: start from the
    // prior c value, add products in ascending shared-dimension order.
    for (std::size_t j = 0; j < N; ++j) {
        for (std::size_t i = 0; i < M; ++i) {
            double acc = c[i + j * M];
            for (std::size_t p = 0; p < K; ++p) {
                acc += a[i + p * M] * b[p + j * K];
            }
            c[i + j * M] = acc;
        }
    }
}

template <std::size_t M, std::size_t N, std::size_t... Ki>
void register_k(KernelTable& t, std::index_sequence<Ki...>) {
    (t.register_kernel({M, N, kEdges[Ki]}, &fixed_gemm_acc<M, N, kEdges[Ki]>), ...);
}

template <std::size_t M, std::size_t... Ni>
void register_n(KernelTable& t, std::index_sequence<Ni...>) {
    (register_k<M, kEdges[Ni]>(t, std::make_index_sequence<kEdges.size()>{}), ...);
}

template <std::size_t... Mi>
void register_m(KernelTable& t, std::index_sequence<Mi...>) {
    (register_n<kEdges[Mi]>(t, std::make_index_sequence<kEdges.size()>{}), ...);
}

}  // namespace

std::span<const std::size_t> specialized_edge_sizes() { return kEdges; }

namespace detail {

void register_default_specializations(KernelTable& table) {
    register_m(table, std::make_index_sequence<kEdges.size()>{});
}

}  // namespace detail

}  // namespace bsmm
