#include "blade/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "kernel_table.hpp"

namespace blade::kernels {
namespace {

using detail::KernelTable;

bool cpu_supports(Backend b) {
    switch (b) {
        case Backend::scalar:
            return true;
        case Backend::avx2:
#if defined(BLADE_HAVE_AVX2)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
    }
    return false;
}

const KernelTable* table_for(Backend b) {
    switch (b) {
        case Backend::scalar:
            return &detail::scalar_table;
        case Backend::avx2:
#if defined(BLADE_HAVE_AVX2)
            return &detail::avx2_table;
#else
            break;
#endif
    }
    return &detail::scalar_table;
}

struct Dispatch {
    std::atomic<const KernelTable*> table;
    std::atomic<Backend> backend;

    Dispatch() {
        Backend pick = cpu_supports(Backend::avx2) ? Backend::avx2 : Backend::scalar;
        if (const char* env = std::getenv("BLADE_KERNEL_BACKEND")) {
            if (std::strcmp(env, "scalar") == 0) {
                pick = Backend::scalar;
            } else if (std::strcmp(env, "avx2") == 0 && cpu_supports(Backend::avx2)) {
                pick = Backend::avx2;
            }
        }
        backend.store(pick);
        table.store(table_for(pick));
    }
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

const KernelTable* table() { return dispatch().table.load(std::memory_order_relaxed); }

}  // namespace

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar:
            return "scalar";
        case Backend::avx2:
            return "avx2";
    }
    return "unknown";
}

Backend active_backend() { return dispatch().backend.load(); }

bool set_backend(Backend b) {
    if (!cpu_supports(b)) return false;
    dispatch().backend.store(b);
    dispatch().table.store(table_for(b));
    return true;
}

std::vector<Backend> supported_backends() {
    std::vector<Backend> out{Backend::scalar};
    if (cpu_supports(Backend::avx2)) out.push_back(Backend::avx2);
    return out;
}

double masked_softmax(const double* logits, const std::uint8_t* mask,
                      double inv_temp, double* probs, std::size_t n) {
    return table()->masked_softmax(logits, mask, inv_temp, probs, n);
}

double sum(const double* x, std::size_t n) { return table()->sum(x, n); }

double dot(const double* a, const double* b, std::size_t n) {
    return table()->dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    table()->axpy(alpha, x, y, n);
}

void weighted_mul_add(const double* p, const double* l, double a, double b,
                      double* y, std::size_t n) {
    table()->weighted_mul_add(p, l, a, b, y, n);
}

void masked_scaled_diff(const double* a, const double* b,
                        const std::uint8_t* mask, double scale, double shift,
                        double* out, std::size_t n) {
    table()->masked_scaled_diff(a, b, mask, scale, shift, out, n);
}

std::size_t count_less(const double* x, std::size_t n, double bound) {
    return table()->count_less(x, n, bound);
}

}  // namespace blade::kernels
