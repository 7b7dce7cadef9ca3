#include "ruin/kernels.hpp"

#include <cstdlib>
#include <mutex>

namespace ruin::kernels {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double dot_rev_scalar(const double* x, const double* y_hi, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y_hi[-static_cast<std::ptrdiff_t>(i)];
    return acc;
}

namespace {

using DotFn = double (*)(const double*, const double*, std::size_t);

struct Dispatch {
    DotFn dot = &dot_scalar;
    DotFn dot_rev = &dot_rev_scalar;
    std::string variant = "scalar";
};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Dispatch& dispatch() {
    static const Dispatch d = [] {
        Dispatch r;
        const char* env = std::getenv("RUIN_KERNEL");
        const std::string want = env ? env : "auto";
        const bool use_avx2 = (want == "avx2") || (want != "scalar" && cpu_has_avx2());
#if defined(__x86_64__) || defined(_M_X64)
        if (use_avx2 && cpu_has_avx2()) {
            r.dot = &dot_avx2;
            r.dot_rev = &dot_rev_avx2;
            r.variant = "avx2";
        }
#else
        (void)use_avx2;
#endif
        return r;
    }();
    return d;
}

} // namespace

double dot(const double* x, const double* y, std::size_t n) { return dispatch().dot(x, y, n); }
double dot_rev(const double* x, const double* y_hi, std::size_t n) { return dispatch().dot_rev(x, y_hi, n); }
const std::string& active_variant() { return dispatch().variant; }
bool avx2_available() { return cpu_has_avx2(); }

} // namespace ruin::kernels
