#pragma once

// Probability mass functions on {0,1,2,...} and the periodic season bundle.
// All types are immutable after construction; concurrent reads are safe.

#include <cmath>
#include <utility>
#include <vector>

#include "ruin/errors.hpp"
#include "ruin/scalar.hpp"

namespace ruin {

template <class S>
class Pmf {
public:
    // masses normalized to sum + tail_deficit == 1; deficit > 0 only for
    // truncated parametric families.
    static Pmf from_weights(std::vector<S> weights) {
        if (weights.empty()) throw EmptyWeights{};
        S total(0);
        for (const S& w : weights) {
            if (w < S(0)) throw NegativeWeight{};
            total += w;
        }
        if (total == S(0)) throw ZeroTotal{};
        for (S& w : weights) w = w / total;
        return Pmf(std::move(weights), S(0));
    }

    static Pmf point_mass(int k) {
        std::vector<S> m(static_cast<std::size_t>(k) + 1, S(0));
        m.back() = S(1);
        return Pmf(std::move(m), S(0));
    }

    // Truncated Poisson(lambda): keep k = 0..K with K minimal such that the
    // residual tail mass is <= tail_eps; the residual is kept as tail_deficit.
    static Pmf poisson(double lambda, double tail_eps = 1e-12)
        requires(!scalar_traits<S>::is_exact)
    {
        if (!(lambda > 0)) throw InvalidParameter("poisson: lambda must be > 0");
        if (!(tail_eps > 0 && tail_eps < 1)) throw InvalidParameter("poisson: tail_eps must be in (0,1)");
        std::vector<S> m;
        S term(std::exp(-lambda));
        S cum = term;
        m.push_back(term);
        int k = 0;
        while (S(1) - cum > S(tail_eps)) {
            ++k;
            term = term * S(lambda) / S(k);
            cum += term;
            m.push_back(term);
            if (k > 100000) throw InvalidParameter("poisson: truncation did not converge");
        }
        return Pmf(std::move(m), S(1) - cum);
    }

    // Truncated geometric(p), masses p(1-p)^k; deficit (1-p)^{K+1} <= tail_eps.
    static Pmf geometric(double p, double tail_eps = 1e-12)
        requires(!scalar_traits<S>::is_exact)
    {
        if (!(p > 0 && p < 1)) throw InvalidParameter("geometric: p must be in (0,1)");
        if (!(tail_eps > 0 && tail_eps < 1)) throw InvalidParameter("geometric: tail_eps must be in (0,1)");
        const S q(1.0 - p);
        std::vector<S> m{S(p)};
        S qpow = q; // (1-p)^{k+1} after pushing index k
        while (qpow > S(tail_eps)) {
            m.push_back(S(p) * qpow);
            qpow = qpow * q;
        }
        return Pmf(std::move(m), qpow);
    }

    const std::vector<S>& masses() const { return masses_; }
    int max_support() const { return static_cast<int>(masses_.size()) - 1; }
    const S& tail_deficit() const { return deficit_; }

    // mass(k) is exact 0 outside the stored support.
    S mass(int k) const {
        if (k < 0 || k > max_support()) return S(0);
        return masses_[static_cast<std::size_t>(k)];
    }

    S mean() const {
        S acc(0);
        for (std::size_t k = 1; k < masses_.size(); ++k) acc += S(static_cast<int>(k)) * masses_[k];
        return acc;
    }

    // cdf(-1) = 0 by convention; cdf(max_support) = 1 - tail_deficit.
    S cdf(int x) const {
        S acc(0);
        const int top = x < max_support() ? x : max_support();
        for (int k = 0; k <= top; ++k) acc += masses_[static_cast<std::size_t>(k)];
        return acc;
    }

    // tail(x) = 1 - cdf(x); the truncated residual is part of the tail, so
    // one-step ruin probabilities are exact even for truncated families.
    // Prefix sums can overshoot 1 by an ulp in float mode; a tail is never
    // negative.
    S tail(int x) const {
        S t = S(1) - cdf(x);
        if (t < S(0)) t = S(0);
        return t;
    }

    friend Pmf convolve(const Pmf& p, const Pmf& q) {
        std::vector<S> r(p.masses_.size() + q.masses_.size() - 1, S(0));
        for (std::size_t i = 0; i < p.masses_.size(); ++i) {
            const S& pi = p.masses_[i];
            if (pi == S(0)) continue;
            for (std::size_t j = 0; j < q.masses_.size(); ++j) {
                if (q.masses_[j] == S(0)) continue;
                r[i + j] += pi * q.masses_[j];
            }
        }
        // 1 - (1-dp)(1-dq)
        S def = p.deficit_ + q.deficit_ - p.deficit_ * q.deficit_;
        return Pmf(std::move(r), def);
    }

    template <class T>
    Pmf<T> convert() const {
        std::vector<T> m;
        m.reserve(masses_.size());
        for (const S& x : masses_) m.push_back(static_cast<T>(x));
        return Pmf<T>(std::move(m), static_cast<T>(deficit_));
    }

    Pmf(std::vector<S> masses, S deficit) : masses_(std::move(masses)), deficit_(std::move(deficit)) {}

private:
    std::vector<S> masses_;
    S deficit_;
};

// Net profit: subcritical means E S < 3 for the period-3 model. In float mode
// a mean within 1e-12 of 3 counts as critical, never subcritical.
template <class S>
bool is_subcritical_mean(const S& mean_s) {
    if constexpr (scalar_traits<S>::is_exact) return mean_s < S(3);
    else return mean_s < S(3) && scalar_abs(mean_s - S(3)) > S(1e-12);
}

// Ordered period-m season list plus the aggregate S = Z_1 + ... + Z_m.
template <class S>
class SeasonalModel {
public:
    explicit SeasonalModel(std::vector<Pmf<S>> seasons) : seasons_(std::move(seasons)) {
        if (seasons_.empty()) throw InvalidParameter("model needs at least one season");
        Pmf<S> agg = seasons_[0];
        for (std::size_t i = 1; i < seasons_.size(); ++i) agg = convolve(agg, seasons_[i]);
        aggregate_.push_back(std::move(agg));
        mean_s_ = aggregate_[0].mean();
    }

    int period() const { return static_cast<int>(seasons_.size()); }
    const Pmf<S>& season(int j) const { return seasons_[static_cast<std::size_t>(j)]; }
    const std::vector<Pmf<S>>& seasons() const { return seasons_; }
    const Pmf<S>& aggregate() const { return aggregate_[0]; }
    const S& mean_s() const { return mean_s_; }

    template <class T>
    SeasonalModel<T> convert() const {
        std::vector<Pmf<T>> ss;
        ss.reserve(seasons_.size());
        for (const auto& z : seasons_) ss.push_back(z.template convert<T>());
        return SeasonalModel<T>(std::move(ss));
    }

private:
    std::vector<Pmf<S>> seasons_;
    std::vector<Pmf<S>> aggregate_; // single element; vector dodges Pmf's lack of default ctor
    S mean_s_;
};

} // namespace ruin
