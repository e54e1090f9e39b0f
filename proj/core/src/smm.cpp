#include "bsmm/smm.hpp"

#include <cmath>
#include <string>

#include "bsmm/errors.hpp"

namespace bsmm {

void generic_gemm_acc(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            double acc = c[i + j * m];
            for (std::size_t p = 0; p < k; ++p) {
                acc += a[i + p * m] * b[p + j * k];
            }
            c[i + j * m] = acc;
        }
    }
}

void KernelTable::register_kernel(KernelKey key, KernelFn fn) {
    if (map_.emplace(key, fn).second) {
        keys_.push_back(key);
    } else {
        map_[key] = fn;
    }
}

Kernel KernelTable::dispatch(KernelKey key) const {
    auto it = map_.find(key);
    if (it != map_.end()) {
        return {it->second, true};
    }
    return {&generic_gemm_acc, false};
}

const KernelTable& KernelTable::with_default_specializations() {
    static const KernelTable table = [] {
        KernelTable t;
        detail::register_default_specializations(t);
        return t;
    }();
    return table;
}

void gemm_acc(KernelKey key, std::span<const double> a, std::span<const double> b,
              std::span<double> c, const KernelTable& table) {
    auto dim_ok = [](std::size_t d) { return d >= 1 && d <= kMaxKernelDim; };
    if (!dim_ok(key.m) || !dim_ok(key.n) || !dim_ok(key.k)) {
        throw ParameterError("kernel dimensions (" + std::to_string(key.m) + ", " +
                             std::to_string(key.n) + ", " + std::to_string(key.k) +
                             ") outside [1, " + std::to_string(kMaxKernelDim) + "]");
    }
    if (a.size() != key.m * key.k) {
        throw ParameterError("a buffer has " + std::to_string(a.size()) +
                             " elements, key requires " + std::to_string(key.m * key.k));
    }
    if (b.size() != key.k * key.n) {
        throw ParameterError("b buffer has " + std::to_string(b.size()) +
                             " elements, key requires " + std::to_string(key.k * key.n));
    }
    if (c.size() != key.m * key.n) {
        throw ParameterError("c buffer has " + std::to_string(c.size()) +
                             " elements, key requires " + std::to_string(key.m * key.n));
    }
    table.dispatch(key).fn(a.data(), b.data(), c.data(), key.m, key.n, key.k);
}

double geometric_mean(std::span<const double> values) {
    if (values.empty()) {
        throw ParameterError("geometric mean of an empty set");
    }
    double log_sum = 0.0;
    for (double v : values) {
        if (!(v > 0.0)) {
            throw ParameterError("geometric mean requires strictly positive values");
        }
        log_sum += std::log(v);
    }
    return std::exp(log_sum / static_cast<double>(values.size()));
}

}  // namespace bsmm
