#pragma once

// Double-precision inner-loop kernels with a scalar reference implementation
// and an AVX2 variant selected at runtime (override with RUIN_KERNEL=scalar|avx2).
// The exact-rational and big-float lanes never come through here.

#include <cstddef>
#include <string>

namespace ruin::kernels {

// sum_{i<n} x[i] * y[i]
double dot(const double* x, const double* y, std::size_t n);

// sum_{i<n} x[i] * y_hi[-i]  (y walks backward from y_hi)
double dot_rev(const double* x, const double* y_hi, std::size_t n);

// Scalar reference implementations, always available (equivalence tests).
double dot_scalar(const double* x, const double* y, std::size_t n);
double dot_rev_scalar(const double* x, const double* y_hi, std::size_t n);

#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* x, const double* y, std::size_t n);
double dot_rev_avx2(const double* x, const double* y_hi, std::size_t n);
#endif

// Name of the active variant: "scalar" or "avx2".
const std::string& active_variant();
bool avx2_available();

} // namespace ruin::kernels
