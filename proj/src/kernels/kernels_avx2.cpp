// AVX2 variants of the kernel table. Compiled with -mavx2 -mfma; selected
// at runtime only when the CPU reports AVX2.

#include <immintrin.h>

#include <cassert>
#include <cmath>
#include <cstring>
#include <limits>

#include "kernel_table.hpp"

namespace blade::kernels::detail {
namespace {

// exp() via Cody-Waite range reduction and the Cephes rational minimax
// approximant, ~1 ulp over the reduced range. The scalar twin below uses
// the same formula so vector lanes and loop tails agree bit for bit.
constexpr double kExpLo = -708.396418532264106224;
constexpr double kExpHi = 709.0;
constexpr double kLog2E = 1.4426950408889634073599;
constexpr double kLn2Hi = 6.93145751953125e-1;
constexpr double kLn2Lo = 1.42860682030941723212e-6;
constexpr double kExpP0 = 1.26177193074810590878e-4;
constexpr double kExpP1 = 3.02994407707441961300e-2;
constexpr double kExpP2 = 9.99999999999999999910e-1;
constexpr double kExpQ0 = 3.00198505138664455042e-6;
constexpr double kExpQ1 = 2.52448340349684104192e-3;
constexpr double kExpQ2 = 2.27265548208155028766e-1;
constexpr double kExpQ3 = 2.00000000000000000005e0;

inline double exp_poly(double x) {
    if (x < kExpLo) return 0.0;  // underflow
    x = x > kExpHi ? kExpHi : x;
    const double n = std::floor(kLog2E * x + 0.5);
    x = (x - n * kLn2Hi) - n * kLn2Lo;
    const double xx = x * x;
    const double px = x * ((kExpP0 * xx + kExpP1) * xx + kExpP2);
    const double qx = ((kExpQ0 * xx + kExpQ1) * xx + kExpQ2) * xx + kExpQ3;
    double r = 1.0 + 2.0 * (px / (qx - px));
    const std::int64_t bits = (static_cast<std::int64_t>(n) + 1023) << 52;
    double scale;
    std::memcpy(&scale, &bits, sizeof scale);
    return r * scale;
}

inline __m256d exp_pd(__m256d x) {
    const __m256d lo = _mm256_set1_pd(kExpLo);
    const __m256d hi = _mm256_set1_pd(kExpHi);
    const __m256d live = _mm256_cmp_pd(x, lo, _CMP_GE_OQ);  // else underflow to 0
    x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

    const __m256d n = _mm256_floor_pd(
        _mm256_fmadd_pd(_mm256_set1_pd(kLog2E), x, _mm256_set1_pd(0.5)));
    x = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Hi), x);
    x = _mm256_fnmadd_pd(n, _mm256_set1_pd(kLn2Lo), x);

    const __m256d xx = _mm256_mul_pd(x, x);
    __m256d px = _mm256_fmadd_pd(_mm256_set1_pd(kExpP0), xx,
                                 _mm256_set1_pd(kExpP1));
    px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(kExpP2));
    px = _mm256_mul_pd(px, x);
    __m256d qx = _mm256_fmadd_pd(_mm256_set1_pd(kExpQ0), xx,
                                 _mm256_set1_pd(kExpQ1));
    qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(kExpQ2));
    qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(kExpQ3));

    const __m256d frac = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
    const __m256d r =
        _mm256_fmadd_pd(_mm256_set1_pd(2.0), frac, _mm256_set1_pd(1.0));

    // 2^n through the exponent field; n is within [-1022, 1023] after the clamp.
    const __m128i ni = _mm256_cvtpd_epi32(n);
    const __m256i nq = _mm256_cvtepi32_epi64(ni);
    const __m256i bits = _mm256_slli_epi64(
        _mm256_add_epi64(nq, _mm256_set1_epi64x(1023)), 52);
    return _mm256_and_pd(_mm256_mul_pd(r, _mm256_castsi256_pd(bits)), live);
}

// 4 mask bytes -> 4 all-ones/all-zeros double lanes.
inline __m256d mask_lanes(const std::uint8_t* mask) {
    std::uint32_t raw;
    std::memcpy(&raw, mask, 4);
    const __m256i wide = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(static_cast<int>(raw)));
    return _mm256_castsi256_pd(
        _mm256_cmpgt_epi64(wide, _mm256_setzero_si256()));
}

inline double hmax(__m256d v) {
    const __m128d x = _mm_max_pd(_mm256_castpd256_pd128(v),
                                 _mm256_extractf128_pd(v, 1));
    const __m128d y = _mm_max_sd(x, _mm_unpackhi_pd(x, x));
    return _mm_cvtsd_f64(y);
}

inline double hsum(__m256d v) {
    const __m128d x = _mm_add_pd(_mm256_castpd256_pd128(v),
                                 _mm256_extractf128_pd(v, 1));
    const __m128d y = _mm_add_sd(x, _mm_unpackhi_pd(x, x));
    return _mm_cvtsd_f64(y);
}

double masked_softmax_avx2(const double* logits, const std::uint8_t* mask,
                           double inv_temp, double* probs, std::size_t n) {
    const __m256d vt = _mm256_set1_pd(inv_temp);
    const __m256d neg_huge = _mm256_set1_pd(-std::numeric_limits<double>::max());
    const std::size_t tail = n & 3;
    const std::size_t main = n - tail;

    __m256d vmax = neg_huge;
    for (std::size_t i = 0; i < main; i += 4) {
        const __m256d z = _mm256_mul_pd(_mm256_loadu_pd(logits + i), vt);
        vmax = _mm256_max_pd(vmax, _mm256_blendv_pd(neg_huge, z, mask_lanes(mask + i)));
    }
    double mx = main ? hmax(vmax) : -std::numeric_limits<double>::max();
    for (std::size_t i = main; i < n; ++i) {
        if (mask[i]) {
            const double z = logits[i] * inv_temp;
            if (z > mx) mx = z;
        }
    }
    assert(mx > -std::numeric_limits<double>::max() &&
           "masked_softmax needs >=1 unmasked entry");

    const __m256d vmx = _mm256_set1_pd(mx);
    __m256d vsum = _mm256_setzero_pd();
    for (std::size_t i = 0; i < main; i += 4) {
        const __m256d z = _mm256_mul_pd(_mm256_loadu_pd(logits + i), vt);
        const __m256d e = _mm256_and_pd(exp_pd(_mm256_sub_pd(z, vmx)),
                                        mask_lanes(mask + i));
        _mm256_storeu_pd(probs + i, e);
        vsum = _mm256_add_pd(vsum, e);
    }
    double s = hsum(vsum);
    for (std::size_t i = main; i < n; ++i) {
        const double e = mask[i] ? exp_poly(logits[i] * inv_temp - mx) : 0.0;
        probs[i] = e;
        s += e;
    }

    const __m256d vs = _mm256_set1_pd(s);
    for (std::size_t i = 0; i < main; i += 4) {
        _mm256_storeu_pd(probs + i,
                         _mm256_div_pd(_mm256_loadu_pd(probs + i), vs));
    }
    for (std::size_t i = main; i < n; ++i) probs[i] /= s;
    return mx + std::log(s);
}

double sum_avx2(const double* x, std::size_t n) {
    const std::size_t main = n & ~std::size_t{3};
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < main; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    }
    double s = hsum(acc);
    for (std::size_t i = main; i < n; ++i) s += x[i];
    return s;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    const std::size_t main = n & ~std::size_t{3};
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < main; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    double s = hsum(acc);
    for (std::size_t i = main; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    const std::size_t main = n & ~std::size_t{3};
    for (std::size_t i = 0; i < main; i += 4) {
        _mm256_storeu_pd(
            y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                   _mm256_loadu_pd(y + i)));
    }
    for (std::size_t i = main; i < n; ++i) y[i] += alpha * x[i];
}

void weighted_mul_add_avx2(const double* p, const double* l, double a,
                           double b, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    const std::size_t main = n & ~std::size_t{3};
    for (std::size_t i = 0; i < main; i += 4) {
        const __m256d t = _mm256_fmadd_pd(va, _mm256_loadu_pd(l + i), vb);
        _mm256_storeu_pd(
            y + i, _mm256_fmadd_pd(_mm256_loadu_pd(p + i), t,
                                   _mm256_loadu_pd(y + i)));
    }
    for (std::size_t i = main; i < n; ++i) y[i] += p[i] * (a * l[i] + b);
}

void masked_scaled_diff_avx2(const double* a, const double* b,
                             const std::uint8_t* mask, double scale,
                             double shift, double* out, std::size_t n) {
    const __m256d vscale = _mm256_set1_pd(scale);
    const __m256d vshift = _mm256_set1_pd(shift);
    const std::size_t main = n & ~std::size_t{3};
    for (std::size_t i = 0; i < main; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                        _mm256_loadu_pd(b + i));
        const __m256d v = _mm256_fmsub_pd(d, vscale, vshift);
        _mm256_storeu_pd(out + i, _mm256_and_pd(v, mask_lanes(mask + i)));
    }
    for (std::size_t i = main; i < n; ++i) {
        out[i] = mask[i] ? (a[i] - b[i]) * scale - shift : 0.0;
    }
}

std::size_t count_less_avx2(const double* x, std::size_t n, double bound) {
    const __m256d vb = _mm256_set1_pd(bound);
    const std::size_t main = n & ~std::size_t{3};
    std::size_t c = 0;
    for (std::size_t i = 0; i < main; i += 4) {
        const __m256d lt = _mm256_cmp_pd(_mm256_loadu_pd(x + i), vb, _CMP_LT_OQ);
        c += static_cast<std::size_t>(
            __builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(lt))));
    }
    for (std::size_t i = main; i < n; ++i) {
        if (x[i] < bound) ++c;
    }
    return c;
}

}  // namespace

const KernelTable avx2_table = {
    masked_softmax_avx2,    sum_avx2,
    dot_avx2,               axpy_avx2,
    weighted_mul_add_avx2,  masked_scaled_diff_avx2,
    count_less_avx2,
};

}  // namespace blade::kernels::detail
