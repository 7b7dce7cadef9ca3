// AVX2/FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; entry is gated by the runtime dispatcher in kernels.cpp.

#include "ruin/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace ruin::kernels {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

} // namespace

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double dot_rev_avx2(const double* x, const double* y_hi, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        // y_hi[-i-3 .. -i] reversed to line up with x[i .. i+3]
        __m256d yv = _mm256_loadu_pd(y_hi - i - 3);
        yv = _mm256_permute4x64_pd(yv, _MM_SHUFFLE(0, 1, 2, 3));
        acc = _mm256_fmadd_pd(xv, yv, acc);
    }
    double out = hsum(acc);
    for (; i < n; ++i) out += x[i] * y_hi[-static_cast<std::ptrdiff_t>(i)];
    return out;
}

} // namespace ruin::kernels

#endif
