#pragma once

#include <cstddef>
#include <string>

namespace atinuke::simd {

/// Low-level f64 primitives behind the tensor kernels. Two implementations
/// exist: a scalar reference and an AVX2/FMA variant. The active one is
/// chosen once at startup from cpuid, overridable via the ATINUKE_KERNELS
/// environment variable ("scalar", "avx2", "auto") or force() in tests.
struct Backend {
    const char* name;

    // out[i] = a[i] + b[i]
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    // out[i] = a[i] * b[i]
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x[i] *= c
    void (*scale_inplace)(double c, double* x, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*max)(const double* x, std::size_t n);  // n >= 1
    // out[i] = max(0, x[i])
    void (*relu)(const double* x, double* out, std::size_t n);
    // Row-major C[m x n] += A[m x k] * B[k x n]. C must be pre-zeroed by the
    // caller when a plain product is wanted.
    void (*matmul_acc)(const double* a, const double* b, double* c,
                       std::size_t m, std::size_t k, std::size_t n);
};

const Backend& scalar_backend();
bool avx2_available();

/// Active backend, resolved on first use.
const Backend& active();

/// Test hook: "scalar", "avx2" or "auto". Throws on unknown/unavailable.
void force(const std::string& name);

}  // namespace atinuke::simd
