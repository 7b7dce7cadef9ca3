#pragma once

// Finite-time ruin probabilities psi^(j)(u,T) for periodic claim sequences:
// dynamic programming over horizons, cycling seasons modulo the period.
//
//   psi^(j)(u,1) = tail_j(u)
//   psi^(j)(u,T) = psi^(j)(u,1) + sum_{k=0}^{u} psi^(j+1)(u+1-k, T-1) z^(j)_k
//
// Horizon T needs surpluses up to u_max + T_max - T at the shallower layers;
// the DP allocates that trapezoid internally and returns only the rectangle.

#include <vector>

#include "ruin/errors.hpp"
#include "ruin/kernels.hpp"
#include "ruin/pmf.hpp"

namespace ruin {

template <class S>
struct RuinMatrix {
    std::vector<std::vector<S>> psi; // psi[t-1][u], t = 1..t_max
    int start_season = 0;

    int t_max() const { return static_cast<int>(psi.size()); }
    int u_max() const { return psi.empty() ? -1 : static_cast<int>(psi[0].size()) - 1; }
    const S& at(int u, int t) const { return psi[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(u)]; }
};

template <class S>
S one_step_ruin(const Pmf<S>& season, int u) {
    if (u < 0) throw SolverError("one_step_ruin: u must be >= 0");
    return season.tail(u);
}

namespace detail {

template <class S>
S layer_dot(const std::vector<S>& z, const std::vector<S>& next_layer, int u) {
    const int kmax = std::min<int>(u, static_cast<int>(z.size()) - 1);
    if constexpr (std::is_same_v<S, double>) {
        return kernels::dot_rev(z.data(), next_layer.data() + (u + 1), static_cast<std::size_t>(kmax) + 1);
    } else {
        S acc(0);
        for (int k = 0; k <= kmax; ++k) acc += z[static_cast<std::size_t>(k)] * next_layer[static_cast<std::size_t>(u + 1 - k)];
        return acc;
    }
}

} // namespace detail

template <class S>
RuinMatrix<S> finite_time_ruin(const SeasonalModel<S>& model, int u_max, int t_max, int start_season = 0) {
    const int m = model.period();
    if (start_season < 0 || start_season >= m) throw InvalidSeasonIndex(start_season);
    if (u_max < 0 || t_max < 1) throw SolverError("finite_time_ruin: need u_max >= 0 and t_max >= 1");

    const int top_width = u_max + t_max; // layer 1 holds u = 0..u_max + t_max - 1
    std::vector<std::vector<S>> tails(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        auto& tj = tails[static_cast<std::size_t>(j)];
        tj.resize(static_cast<std::size_t>(top_width) + 1);
        S prefix(0);
        for (int u = 0; u <= top_width; ++u) {
            prefix += model.season(j).mass(u);
            S t = S(1) - prefix;
            if (t < S(0)) t = S(0);
            tj[static_cast<std::size_t>(u)] = t;
        }
    }

    RuinMatrix<S> out;
    out.start_season = start_season;
    out.psi.resize(static_cast<std::size_t>(t_max));

    std::vector<std::vector<S>> prev(static_cast<std::size_t>(m));
    std::vector<std::vector<S>> cur(static_cast<std::size_t>(m));
    for (int t = 1; t <= t_max; ++t) {
        const int width = u_max + (t_max - t); // u = 0..width
        for (int j = 0; j < m; ++j) {
            auto& row = cur[static_cast<std::size_t>(j)];
            row.assign(static_cast<std::size_t>(width) + 1, S(0));
            const auto& z = model.season(j).masses();
            const auto& next = prev[static_cast<std::size_t>((j + 1) % m)];
            for (int u = 0; u <= width; ++u) {
                S v = tails[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)];
                if (t > 1) v += detail::layer_dot(z, next, u);
                row[static_cast<std::size_t>(u)] = v;
            }
        }
        auto& dst = out.psi[static_cast<std::size_t>(t - 1)];
        const auto& src = cur[static_cast<std::size_t>(start_season)];
        dst.assign(src.begin(), src.begin() + u_max + 1);
        for (S& v : dst) { // rounding hygiene only; the sums are nonnegative
            if (v > S(1)) v = S(1);
        }
        std::swap(prev, cur);
    }
    return out;
}

} // namespace ruin
