#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace blade::kernels {

// Data-parallel inner loops behind the policy, estimator, and trainer.
// Scalar implementations are the reference semantics; SIMD variants are
// selected at runtime and must agree with scalar within test tolerances
// (see tests/test_kernels.cpp).

enum class Backend { scalar, avx2 };

const char* backend_name(Backend b);

// Backend active for all kernel calls in this process.
Backend active_backend();

// Selects a backend; returns false (and leaves the active backend
// unchanged) if the CPU does not support it. The BLADE_KERNEL_BACKEND
// environment variable ("scalar" or "avx2") overrides auto-detection at
// first use.
bool set_backend(Backend b);

std::vector<Backend> supported_backends();

// probs[i] = exp(logits[i]*inv_temp - lse) where mask[i] != 0, else 0.
// lse is the max-shifted log-sum-exp of the unmasked scaled logits and is
// returned, so log-probabilities can be formed as logits[i]*inv_temp - lse
// without re-rounding through probs. Requires at least one unmasked entry.
double masked_softmax(const double* logits, const std::uint8_t* mask,
                      double inv_temp, double* probs, std::size_t n);

double sum(const double* x, std::size_t n);

double dot(const double* a, const double* b, std::size_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

// y[i] += p[i] * (a * l[i] + b); the KL-gradient accumulation shape.
void weighted_mul_add(const double* p, const double* l, double a, double b,
                      double* y, std::size_t n);

// out[i] = mask[i] ? (a[i] - b[i]) * scale - shift : 0
void masked_scaled_diff(const double* a, const double* b,
                        const std::uint8_t* mask, double scale, double shift,
                        double* out, std::size_t n);

// |{ i : x[i] < bound }| (strict).
std::size_t count_less(const double* x, std::size_t n, double bound);

}  // namespace blade::kernels
