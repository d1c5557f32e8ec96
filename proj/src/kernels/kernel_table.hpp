#pragma once

#include <cstddef>
#include <cstdint>

namespace blade::kernels::detail {

struct KernelTable {
    double (*masked_softmax)(const double*, const std::uint8_t*, double,
                             double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*weighted_mul_add)(const double*, const double*, double, double,
                             double*, std::size_t);
    void (*masked_scaled_diff)(const double*, const double*,
                               const std::uint8_t*, double, double, double*,
                               std::size_t);
    std::size_t (*count_less)(const double*, std::size_t, double);
};

extern const KernelTable scalar_table;

#ifdef BLADE_HAVE_AVX2
extern const KernelTable avx2_table;
#endif

}  // namespace blade::kernels::detail
