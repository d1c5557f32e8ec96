#include <cassert>
#include <cmath>
#include <limits>

#include "kernel_table.hpp"

namespace blade::kernels::detail {
namespace {

double masked_softmax_scalar(const double* logits, const std::uint8_t* mask,
                             double inv_temp, double* probs, std::size_t n) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (mask[i]) {
            const double z = logits[i] * inv_temp;
            if (z > mx) mx = z;
        }
    }
    assert(std::isfinite(mx) && "masked_softmax needs >=1 unmasked entry");

    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask[i]) {
            const double e = std::exp(logits[i] * inv_temp - mx);
            probs[i] = e;
            s += e;
        } else {
            probs[i] = 0.0;
        }
    }
    for (std::size_t i = 0; i < n; ++i) probs[i] /= s;
    return mx + std::log(s);
}

double sum_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void weighted_mul_add_scalar(const double* p, const double* l, double a,
                             double b, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += p[i] * (a * l[i] + b);
}

void masked_scaled_diff_scalar(const double* a, const double* b,
                               const std::uint8_t* mask, double scale,
                               double shift, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = mask[i] ? (a[i] - b[i]) * scale - shift : 0.0;
    }
}

std::size_t count_less_scalar(const double* x, std::size_t n, double bound) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] < bound) ++c;
    }
    return c;
}

}  // namespace

const KernelTable scalar_table = {
    masked_softmax_scalar,    sum_scalar,
    dot_scalar,               axpy_scalar,
    weighted_mul_add_scalar,  masked_scaled_diff_scalar,
    count_less_scalar,
};

}  // namespace blade::kernels::detail
