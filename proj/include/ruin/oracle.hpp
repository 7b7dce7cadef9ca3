#pragma once

// Verification engines independent of the recursive solvers: exhaustive path
// enumeration (exact in rational mode) and seeded Monte Carlo simulation of
// the surplus process W_u(n) = u + n - sum Z_i, ruin at W <= 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "ruin/errors.hpp"
#include "ruin/pmf.hpp"

namespace ruin {

// Counter-free splittable generator; per-path substreams are derived from
// (seed, path_index) so results do not depend on the worker count.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t s) : state(s) {}
    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t path_index) {
    SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ull * (path_index + 1)));
    g.next();
    return g.next();
}

inline const char* rng_algorithm_id() { return "splitmix64-per-path"; }

struct McEstimate {
    double p_hat = 0;
    double std_err = 0;
    std::int64_t n_paths = 0;
    std::uint64_t seed = 0;
    std::string rng = rng_algorithm_id();
};

// ---------------------------------------------------------------------------
// exact enumeration

namespace detail {

template <class S>
void enum_rec(const std::vector<const Pmf<S>*>& seasons, int step, int T, int surplus, const S& prob, S& ruined) {
    const Pmf<S>& z = *seasons[static_cast<std::size_t>(step % static_cast<int>(seasons.size()))];
    const auto& masses = z.masses();
    for (int k = 0; k < static_cast<int>(masses.size()); ++k) {
        const S& pk = masses[static_cast<std::size_t>(k)];
        if (pk == S(0)) continue;
        const int s2 = surplus + 1 - k;
        if (s2 <= 0) {
            // ruined at this step: every continuation shares this prefix mass
            ruined += prob * pk;
        } else if (step + 1 < T) {
            enum_rec(seasons, step + 1, T, s2, S(prob * pk), ruined);
        }
    }
}

} // namespace detail

// psi(u,T) by iterating every claim tuple, with ruined-prefix pruning.
template <class S>
S enumerate_finite_time(const SeasonalModel<S>& model, int u, int T) {
    if (u < 0 || T < 1) throw SolverError("enumerate_finite_time: need u >= 0, T >= 1");
    double log_states = 0;
    for (int t = 0; t < T; ++t) {
        const auto& z = model.season(t % model.period());
        if (z.tail_deficit() != S(0)) throw InfiniteSupport{};
        log_states += std::log10(static_cast<double>(z.max_support()) + 1.0);
    }
    if (log_states > 8.0) throw RefuseTooLarge{};

    std::vector<const Pmf<S>*> seasons;
    for (int j = 0; j < model.period(); ++j) seasons.push_back(&model.season(j));
    S ruined(0);
    detail::enum_rec(seasons, 0, T, u, S(1), ruined);
    return ruined;
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace detail {

struct SamplerTable {
    std::vector<std::vector<double>> cdf; // per season, inclusive prefix sums
    std::vector<int> top;
    int period = 0;

    template <class S>
    explicit SamplerTable(const SeasonalModel<S>& model) {
        period = model.period();
        for (int j = 0; j < period; ++j) {
            const auto& m = model.season(j).masses();
            std::vector<double> c(m.size());
            double acc = 0;
            for (std::size_t k = 0; k < m.size(); ++k) {
                acc += scalar_traits<S>::to_double(m[k]);
                c[k] = acc;
            }
            cdf.push_back(std::move(c));
            top.push_back(model.season(j).max_support());
        }
    }

    // inverse-cdf draw; truncated-tail residual lands on the top support point
    int draw(int season, double r) const {
        const auto& c = cdf[static_cast<std::size_t>(season)];
        auto it = std::upper_bound(c.begin(), c.end(), r);
        int k = static_cast<int>(it - c.begin());
        return std::min(k, top[static_cast<std::size_t>(season)]);
    }

    int max_step_drop() const {
        int mx = 0;
        for (int t : top) mx = std::max(mx, t);
        return mx - 1; // worst surplus change per step is 1 - max_support
    }
};

inline int mc_thread_count() {
    if (const char* env = std::getenv("RUIN_NUM_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<int>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

inline std::int64_t mc_count_ruins(const SamplerTable& tab, int u, int T, std::int64_t n_paths, std::uint64_t seed) {
    const int drop = tab.max_step_drop();
    const int nthreads = std::min<std::int64_t>(mc_thread_count(), std::max<std::int64_t>(1, n_paths / 1024));
    std::vector<std::int64_t> counts(static_cast<std::size_t>(nthreads), 0);
    auto work = [&](int tid) {
        std::int64_t local = 0;
        for (std::int64_t p = tid; p < n_paths; p += nthreads) {
            SplitMix64 g(substream_seed(seed, static_cast<std::uint64_t>(p)));
            long long s = u;
            for (int t = 0; t < T; ++t) {
                s += 1 - tab.draw(t % tab.period, g.u01());
                if (s <= 0) {
                    ++local;
                    break;
                }
                if (drop <= 0 || s > static_cast<long long>(T - 1 - t) * drop) break; // can no longer ruin
            }
        }
        counts[static_cast<std::size_t>(tid)] = local;
    };
    if (nthreads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    std::int64_t total = 0;
    for (auto c : counts) total += c;
    return total;
}

} // namespace detail

template <class S>
McEstimate mc_finite_time(const SeasonalModel<S>& model, int u, int T, std::int64_t n_paths, std::uint64_t seed) {
    if (n_paths < 1) throw SolverError("mc_finite_time: n_paths must be >= 1");
    if (u < 0 || T < 1) throw SolverError("mc_finite_time: need u >= 0, T >= 1");
    detail::SamplerTable tab(model);
    const std::int64_t ruins = detail::mc_count_ruins(tab, u, T, n_paths, seed);
    McEstimate e;
    e.p_hat = static_cast<double>(ruins) / static_cast<double>(n_paths);
    e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(n_paths));
    e.n_paths = n_paths;
    e.seed = seed;
    return e;
}

// Finite-horizon MC as a proxy for the ultimate psi(u). The estimate is
// biased LOW (psi(u,T) increases to psi(u)), by at most psi(u) - psi(u,T).
// Only meaningful for subcritical models.
template <class S>
McEstimate mc_ultimate_proxy(const SeasonalModel<S>& model, int u, std::int64_t n_paths, std::uint64_t seed,
                             int T_horizon = 3000) {
    if (!is_subcritical_mean(model.mean_s())) throw NotSubcritical{};
    return mc_finite_time(model, u, T_horizon, n_paths, seed);
}

} // namespace ruin
