#pragma once

// Numeric modes. `float` mode computes in double and escalates through
// cpp_bin_float rungs when a solve needs more bits; `exact` mode is GMP
// rationals and never rounds.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/gmp.hpp>

#include <cmath>
#include <cstdint>
#include <string>

#include "ruin/errors.hpp"

namespace ruin {

namespace mp = boost::multiprecision;

using Rational = mp::number<mp::gmp_rational, mp::et_off>;

template <unsigned Bits>
using BigFloat = mp::number<mp::cpp_bin_float<Bits, mp::digit_base_2>, mp::et_off>;

using Float128 = BigFloat<128>;
using Float256 = BigFloat<256>;
using Float512 = BigFloat<512>;
using Float1024 = BigFloat<1024>;
using Float2048 = BigFloat<2048>;
using Float4096 = BigFloat<4096>;

template <class S> struct scalar_traits;

template <> struct scalar_traits<double> {
    static constexpr bool is_exact = false;
    static constexpr int bits = 53;
    static const char* name() { return "double"; }
    static double to_double(double x) { return x; }
    static bool finite(double x) { return std::isfinite(x); }
};

template <unsigned B> struct scalar_traits<BigFloat<B>> {
    static constexpr bool is_exact = false;
    static constexpr int bits = static_cast<int>(B);
    static const char* name() {
        static const std::string n = "binfloat" + std::to_string(B);
        return n.c_str();
    }
    static double to_double(const BigFloat<B>& x) { return static_cast<double>(x); }
    static bool finite(const BigFloat<B>& x) { return mp::isfinite(x); }
};

template <> struct scalar_traits<Rational> {
    static constexpr bool is_exact = true;
    static constexpr int bits = 0; // unbounded
    static const char* name() { return "rational"; }
    static double to_double(const Rational& x) { return static_cast<double>(x); }
    static bool finite(const Rational&) { return true; }
};

template <class S> inline S scalar_abs(const S& x) { return x < S(0) ? S(-x) : x; }

// Exact decimal/fraction literal -> rational: "0.25" -> 1/4, "1/3", "2", "1e-3".
Rational rational_from_decimal(const std::string& text);

// Round half away from zero to three decimals (the tables' print convention).
inline double round3(double x) {
    return (x < 0 ? -1.0 : 1.0) * std::floor(std::abs(x) * 1000.0 + 0.5) / 1000.0;
}

} // namespace ruin
