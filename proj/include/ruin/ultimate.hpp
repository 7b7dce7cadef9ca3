#pragma once

// Ultimate (infinite-horizon) ruin for the period-3 model.
//
// Two independent solvers share one far-field driver:
//   * ultimate_branch  — the ten-case coefficient recursions, dispatched on
//     the exact zero pattern of (a0, a1, b0, b1, c0, c1);
//   * ultimate_generic — branch-free linear propagation of the identities
//       drift:  3 - E S = phi(0) + b0c0 phi(2) + b0c1 phi(1) + c0 phi(1)
//       step:   phi(u)  = sum_{k=0}^{u+2} s_{u+2-k} phi(k+1)
//                         - a_{u+1} b0c0 phi(2) - a_{u+1} b0c1 phi(1)
//                         - c0 phi(1) sum_{k=0}^{u+2} a_k b_{u+2-k}
//     writing every phi(n) as A_n phi0 + B_n phi1 + C_n (3 - E S).
//
// Both close the recursion with the far-field condition phi(N) = phi(N+1) = 1
// at a large boundary index N (adaptive by default), solve the resulting
// small linear system for the unknown initial values, and report psi = 1-phi.
//
// Coefficient magnitudes grow geometrically, so the float lane escalates
// through big-float rungs until the solution passes its self-checks; the
// rational lane is exact and never escalates.

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <type_traits>
#include <vector>

#include "ruin/errors.hpp"
#include "ruin/finite_time.hpp"
#include "ruin/kernels.hpp"
#include "ruin/pmf.hpp"
#include "ruin/scalar.hpp"

namespace ruin {

// ---------------------------------------------------------------------------
// net profit classification

enum class NetProfitKind { Supercritical, CriticalDegenerate, CriticalDiffuse, Subcritical };

struct NetProfitClass {
    NetProfitKind kind = NetProfitKind::Subcritical;
    std::optional<std::array<int, 3>> pattern; // point-mass locations when degenerate
    int ones_prefix = 0;                       // degenerate: psi(u) = 1 iff u < ones_prefix

    // psi profile for the non-subcritical kinds
    double psi(int u) const {
        switch (kind) {
            case NetProfitKind::Supercritical:
            case NetProfitKind::CriticalDiffuse: return 1.0;
            case NetProfitKind::CriticalDegenerate: return u < ones_prefix ? 1.0 : 0.0;
            case NetProfitKind::Subcritical: break;
        }
        throw SolverError("psi profile is only defined for non-subcritical classes");
    }
};

inline const char* to_string(NetProfitKind k) {
    switch (k) {
        case NetProfitKind::Supercritical: return "Supercritical";
        case NetProfitKind::CriticalDegenerate: return "CriticalDegenerate";
        case NetProfitKind::CriticalDiffuse: return "CriticalDiffuse";
        case NetProfitKind::Subcritical: return "Subcritical";
    }
    return "?";
}

namespace detail {

// Atom tests are exact by design: zero atoms are declared, never approximated,
// and the branch dispatch is structurally discontinuous in them.
template <class S>
std::optional<int> point_mass_location(const Pmf<S>& p) {
    std::optional<int> loc;
    for (int k = 0; k <= p.max_support(); ++k) {
        if (p.mass(k) == S(0)) continue;
        if (p.mass(k) == S(1) && !loc) { loc = k; continue; }
        return std::nullopt;
    }
    return loc;
}

// E S = 3 point-mass patterns and their psi-ones prefixes.
inline int degenerate_ones_prefix(const std::array<int, 3>& loc) {
    struct Row { std::array<int, 3> loc; int prefix; };
    static constexpr Row table[] = {
        {{3, 0, 0}, 3},
        {{0, 3, 0}, 2}, {{2, 1, 0}, 2}, {{1, 2, 0}, 2}, {{2, 0, 1}, 2},
        {{0, 0, 3}, 1}, {{0, 2, 1}, 1}, {{0, 1, 2}, 1}, {{1, 0, 2}, 1}, {{1, 1, 1}, 1},
    };
    for (const Row& r : table)
        if (r.loc == loc) return r.prefix;
    throw SolverError("degenerate pattern not in the ten-case table");
}

template <class S>
bool mean_is_critical(const S& mean_s) {
    if constexpr (scalar_traits<S>::is_exact) return mean_s == S(3);
    else return scalar_abs(mean_s - S(3)) <= S(1e-12);
}

} // namespace detail

template <class S>
NetProfitClass classify_net_profit(const SeasonalModel<S>& model) {
    if (model.period() != 3) throw WrongPeriod(model.period());
    NetProfitClass out;
    const S& es = model.mean_s();
    std::array<std::optional<int>, 3> locs;
    for (int j = 0; j < 3; ++j) locs[static_cast<std::size_t>(j)] = detail::point_mass_location(model.season(j));
    const bool all_points = locs[0] && locs[1] && locs[2];
    if (all_points && *locs[0] + *locs[1] + *locs[2] == 3) {
        // s3 = 1, E S = 3 exactly
        out.kind = NetProfitKind::CriticalDegenerate;
        out.pattern = {*locs[0], *locs[1], *locs[2]};
        out.ones_prefix = detail::degenerate_ones_prefix(*out.pattern);
        return out;
    }
    if (detail::mean_is_critical(es)) {
        out.kind = NetProfitKind::CriticalDiffuse;
        return out;
    }
    out.kind = es > S(3) ? NetProfitKind::Supercritical : NetProfitKind::Subcritical;
    return out;
}

// Theorem-5 case number from the exact zero pattern (1..10).
template <class S>
int theorem5_branch(const SeasonalModel<S>& model) {
    const auto& a = model.season(0);
    const auto& b = model.season(1);
    const auto& c = model.season(2);
    const bool a0 = a.mass(0) != S(0), a1 = a.mass(1) != S(0);
    const bool b0 = b.mass(0) != S(0), b1 = b.mass(1) != S(0);
    const bool c0 = c.mass(0) != S(0), c1 = c.mass(1) != S(0);
    if (a0 && b0 && c0) return 1;
    if (!a0 && b0 && c0) return a1 ? 2 : 8;
    if (a0 && !b0 && c0) return b1 ? 3 : 9;
    if (a0 && b0 && !c0) return c1 ? 4 : 10;
    if (!a0 && !b0 && c0) return 5;
    if (!a0 && b0 && !c0) return 6;
    if (a0 && !b0 && !c0) return 7;
    throw NoBranchMatched{};
}

// ---------------------------------------------------------------------------
// solve options / report

enum class FormulaVariant {
    validated,   // recursions consistent with the generic solver and oracles
    transcribed, // original transcriptions of the disputed formulas (diagnostics)
};

struct SolveOptions {
    int u_max = 20;
    std::optional<int> boundary_index; // engaged value of N; nullopt = adaptive
    bool precision_escalation = true;  // float lane only
    FormulaVariant variant = FormulaVariant::validated;
};

template <class S>
struct SurvivalVector {
    std::vector<S> phi;     // clamped to [0,1], u = 0..u_max
    std::vector<S> phi_raw; // pre-clamp values, for diagnostics
    std::vector<S> psi;     // 1 - phi

    int boundary_index = 0; // far-field index N actually used
    S residual{};           // max |phi(n) - 1| over the trailing window
    S resid_drift{};        // residual of the drift identity on the reported values
    S resid_step{};         // max residual of the step identity, u <= u_max - 3
    S clamp_move{};         // largest distance the clamp moved any value
    S monotone_violation{}; // largest raw decrease phi(u) - phi(u+1)

    int branch_id = 0;        // Theorem-5 case (0 for the homogeneous solver)
    int precision_bits = 0;   // bits of the rung that produced the result (0 = exact)
    int escalations = 0;      // precision rungs consumed before success
    bool clamp_warning = false;
};

// ---------------------------------------------------------------------------
// coefficient engines

namespace detail {

template <class W>
struct Triple {
    W a{0}, b{0}, c{0};
};

// model atoms and shared convolutions, all in the working scalar
template <class W>
struct Ctx {
    Pmf<W> a, b, c, s, ab;
    W drift; // 3 - E S
    W b0c0, b0c1, c0;

    explicit Ctx(const SeasonalModel<W>& m)
        : a(m.season(0)), b(m.season(1)), c(m.season(2)), s(m.aggregate()),
          ab(convolve(m.season(0), m.season(1))), drift(W(3) - m.mean_s()) {
        b0c0 = b.mass(0) * c.mass(0);
        b0c1 = b.mass(0) * c.mass(1);
        c0 = c.mass(0);
    }

    int leading_atom() const {
        for (int k = 0; k <= s.max_support(); ++k)
            if (s.mass(k) != W(0)) return k;
        throw NoBranchMatched{};
    }
};

template <class W>
bool magnitude_bad(const W& x) {
    if (!scalar_traits<W>::finite(x)) return true;
    if constexpr (std::is_same_v<W, double>) return scalar_abs(x) > 1e200;
    return false;
}

// sum_{k=lo}^{hi} s_k * v[base - k], the convolution tail of a coefficient row
template <class W>
W conv_tail(const std::vector<W>& s, int lo, int hi, const std::vector<W>& v, int base) {
    if (hi < lo) return W(0);
    if constexpr (std::is_same_v<W, double>) {
        return kernels::dot_rev(s.data() + lo, v.data() + (base - lo), static_cast<std::size_t>(hi - lo) + 1);
    } else {
        W acc(0);
        for (int k = lo; k <= hi; ++k) acc += s[static_cast<std::size_t>(k)] * v[static_cast<std::size_t>(base - k)];
        return acc;
    }
}

// Generic linear-propagation engine.
template <class W>
class GenericEngine {
public:
    GenericEngine(const Ctx<W>& ctx, FormulaVariant) : ctx_(ctx), lead_(ctx.leading_atom()) {
        if (lead_ > 2) throw NoBranchMatched{}; // s0=s1=s2=0 impossible under E S < 3
        push({W(1), W(0), W(0)});
        push({W(0), W(1), W(0)});
        if (ctx_.b0c0 != W(0)) {
            // drift identity defines phi(2) when b0c0 != 0 ...
            const W inv = W(1) / ctx_.b0c0;
            push({-inv, -(ctx_.b0c1 + ctx_.c0) * inv, inv});
        } else {
            // ... otherwise it is a pure (phi0, phi1) constraint
            constraints_.push_back({W(1), ctx_.b0c1 + ctx_.c0, W(-1)});
        }
        u_next_ = 0;
    }

    void extend(int upto) {
        while (top() < upto) step();
    }

    int top() const { return static_cast<int>(A_.size()) - 1; }
    const std::vector<W>& A() const { return A_; }
    const std::vector<W>& B() const { return B_; }
    const std::vector<W>& C() const { return C_; }
    const std::vector<Triple<W>>& constraints() const { return constraints_; }
    bool overflowed() const { return overflow_; }
    const Ctx<W>& ctx() const { return ctx_; }

private:
    void push(const Triple<W>& t) {
        A_.push_back(t.a);
        B_.push_back(t.b);
        C_.push_back(t.c);
        if (magnitude_bad(t.a) || magnitude_bad(t.b) || magnitude_bad(t.c)) overflow_ = true;
    }

    Triple<W> at(int j) const { return {A_[static_cast<std::size_t>(j)], B_[static_cast<std::size_t>(j)], C_[static_cast<std::size_t>(j)]}; }

    void step() {
        const int u = u_next_++;
        if (u <= 1) { slow_step(u); return; }

        // top index u+3-lead carries coefficient exactly s_lead; all lower known
        const int hi = std::min(u + 2, ctx_.s.max_support());
        Triple<W> R;
        R.a = conv_tail(ctx_.s.masses(), lead_ + 1, hi, A_, u + 3);
        R.b = conv_tail(ctx_.s.masses(), lead_ + 1, hi, B_, u + 3);
        R.c = conv_tail(ctx_.s.masses(), lead_ + 1, hi, C_, u + 3);
        apply_corrections(u, R);
        const W inv = W(1) / ctx_.s.mass(lead_);
        push({-R.a * inv, -R.b * inv, -R.c * inv});
    }

    // subtract phi(u) and the a_{u+1}-terms from the accumulated row
    void apply_corrections(int u, Triple<W>& R) {
        Triple<W> tu = at(u);
        R.a -= tu.a; R.b -= tu.b; R.c -= tu.c;
        const W au1 = ctx_.a.mass(u + 1);
        const W t2 = (au1 * ctx_.b.mass(0)) * ctx_.c.mass(0);
        if (t2 != W(0)) {
            Triple<W> x = at(2);
            R.a -= t2 * x.a; R.b -= t2 * x.b; R.c -= t2 * x.c;
        }
        const W t1 = (au1 * ctx_.b.mass(0)) * ctx_.c.mass(1) + ctx_.c.mass(0) * ctx_.ab.mass(u + 2);
        if (t1 != W(0)) {
            Triple<W> x = at(1);
            R.a -= t1 * x.a; R.b -= t1 * x.b; R.c -= t1 * x.c;
        }
    }

    // u = 0, 1 can degenerate into constraints; build the full row and dispatch
    void slow_step(int u) {
        std::vector<W> vec(static_cast<std::size_t>(u) + 4, W(0));
        for (int j = 1; j <= u + 3; ++j) vec[static_cast<std::size_t>(j)] = ctx_.s.mass(u + 3 - j);
        vec[static_cast<std::size_t>(u)] -= W(1);
        const W au1 = ctx_.a.mass(u + 1);
        vec[2] -= (au1 * ctx_.b.mass(0)) * ctx_.c.mass(0);
        vec[1] -= (au1 * ctx_.b.mass(0)) * ctx_.c.mass(1) + ctx_.c.mass(0) * ctx_.ab.mass(u + 2);

        Triple<W> R;
        int new_index = -1;
        W new_coef(0);
        for (int j = 0; j <= u + 3; ++j) {
            const W& v = vec[static_cast<std::size_t>(j)];
            if (v == W(0)) continue;
            if (j <= top()) {
                Triple<W> x = at(j);
                R.a += v * x.a; R.b += v * x.b; R.c += v * x.c;
            } else {
                if (new_index >= 0) throw SolverError("coefficient propagation: two undetermined indices in one row");
                new_index = j;
                new_coef = v;
            }
        }
        if (new_index < 0) {
            if (R.a != W(0) || R.b != W(0) || R.c != W(0)) constraints_.push_back(R);
            return;
        }
        if (new_index != top() + 1) throw SolverError("coefficient propagation: non-contiguous definition");
        const W inv = W(1) / new_coef;
        push({-R.a * inv, -R.b * inv, -R.c * inv});
    }

    const Ctx<W>& ctx_;
    int lead_;
    int u_next_ = 0;
    std::vector<W> A_, B_, C_;
    std::vector<Triple<W>> constraints_;
    bool overflow_ = false;
};

// Ten-case engine: the per-branch coefficient recursions.
template <class W>
class BranchEngine {
public:
    BranchEngine(const Ctx<W>& ctx, FormulaVariant variant) : ctx_(ctx), variant_(variant) {
        const W a0 = ctx_.a.mass(0), b0 = ctx_.b.mass(0), b1 = ctx_.b.mass(1);
        const W c0 = ctx_.c.mass(0), c1 = ctx_.c.mass(1);
        const W s2 = ctx_.s.mass(2);
        const bool printed = variant_ == FormulaVariant::transcribed;
        branch_ = branch_from_atoms();
        switch (branch_) {
            case 1:
                push({W(1), W(0), W(0)});
                push({W(0), W(1), W(0)});
                push({W(-1) / ctx_.b0c0, -c1 / c0 - W(1) / b0, W(1) / ctx_.b0c0});
                break;
            case 2:
                push({W(0), W(0), W(0)}); // phi(0) = 0
                push({W(0), W(1), W(0)});
                push({W(0), -c1 / c0 - W(1) / b0, W(1) / ctx_.b0c0});
                constraints_.push_back({W(1), W(0), W(0)});
                break;
            case 3:
                push({W(1), W(0), W(0)});
                push({W(-1) / c0, W(0), W(1) / c0});
                push({c1 / (c0 * c0) + W(1) / ((a0 * b1) * c0), W(0), -c1 / (c0 * c0)});
                constraints_.push_back({W(1), c0, W(-1)});
                break;
            case 4:
                push({W(1), W(0), W(0)});
                push({W(-1) / ctx_.b0c1, W(0), W(1) / ctx_.b0c1});
                constraints_.push_back({W(1), ctx_.b0c1, W(-1)});
                break;
            case 5:
            case 9:
                seed_values(W(0), W(1) / c0);
                break;
            case 6:
                if (printed) {
                    const W c1v = W(1) / (s2 + ctx_.b0c1);
                    seed_values(s2 * c1v, c1v);
                } else {
                    seed_values(W(0), W(1) / ctx_.b0c1);
                }
                break;
            case 7:
            case 10:
                seed_values(W(1), W(1) / s2);
                break;
            case 8:
                if (printed) {
                    seed_values(W(0), W(1) / (W(1) / ctx_.a.mass(2) + c0));
                } else {
                    seed_values(W(0), W(0));
                    push({W(0), W(0), W(1) / ctx_.b0c0}); // phi(2) from the drift identity
                }
                break;
            default:
                throw NoBranchMatched{};
        }
    }

    void extend(int upto) {
        while (top() < upto) step();
    }

    int top() const { return static_cast<int>(A_.size()) - 1; }
    const std::vector<W>& A() const { return A_; }
    const std::vector<W>& B() const { return B_; }
    const std::vector<W>& C() const { return C_; }
    const std::vector<Triple<W>>& constraints() const { return constraints_; }
    bool overflowed() const { return overflow_; }
    int branch() const { return branch_; }
    const Ctx<W>& ctx() const { return ctx_; }

private:
    int branch_from_atoms() const {
        const bool a0 = ctx_.a.mass(0) != W(0), a1 = ctx_.a.mass(1) != W(0);
        const bool b0 = ctx_.b.mass(0) != W(0), b1 = ctx_.b.mass(1) != W(0);
        const bool c0 = ctx_.c.mass(0) != W(0), c1 = ctx_.c.mass(1) != W(0);
        if (a0 && b0 && c0) return 1;
        if (!a0 && b0 && c0) return a1 ? 2 : 8;
        if (a0 && !b0 && c0) return b1 ? 3 : 9;
        if (a0 && b0 && !c0) return c1 ? 4 : 10;
        if (!a0 && !b0 && c0) return 5;
        if (!a0 && b0 && !c0) return 6;
        if (a0 && !b0 && !c0) return 7;
        throw NoBranchMatched{};
    }

    void seed_values(const W& phi0_over_drift, const W& phi1_over_drift) {
        push({W(0), W(0), phi0_over_drift});
        push({W(0), W(0), phi1_over_drift});
        constraints_.push_back({W(1), W(0), -phi0_over_drift});
        constraints_.push_back({W(0), W(1), -phi1_over_drift});
    }

    void push(const Triple<W>& t) {
        A_.push_back(t.a);
        B_.push_back(t.b);
        C_.push_back(t.c);
        if (magnitude_bad(t.a) || magnitude_bad(t.b) || magnitude_bad(t.c)) overflow_ = true;
    }

    void step() {
        switch (branch_) {
            case 1: step_period3(); break;
            case 2: case 3: case 4: step_lead1(); break;
            default: step_forward(); break;
        }
    }

    // s0 != 0:  x_n = (x_{n-3} - sum_{k=1}^{n-1} s_k x_{n-k} + extra_n) / s0
    void step_period3() {
        const int n = top() + 1;
        const auto& s = ctx_.s.masses();
        const int hi = std::min(n - 1, ctx_.s.max_support());
        const W inv = W(1) / ctx_.s.mass(0);
        const W an2 = ctx_.a.mass(n - 2);
        W conv = ctx_.ab.mass(n - 1); // sum_k a_k b_{n-1-k}
        Triple<W> R;
        R.a = A_[static_cast<std::size_t>(n - 3)] - conv_tail(s, 1, hi, A_, n) - an2;
        R.b = B_[static_cast<std::size_t>(n - 3)] - conv_tail(s, 1, hi, B_, n) - an2 * ctx_.c.mass(0) + ctx_.c.mass(0) * conv;
        R.c = C_[static_cast<std::size_t>(n - 3)] - conv_tail(s, 1, hi, C_, n) + an2;
        push({R.a * inv, R.b * inv, R.c * inv});
    }

    // s0 = 0, s1 != 0:  x_n = (x_{n-2} - sum_{k=2}^{n} s_k x_{n-k+1} + extra_n) / s1
    void step_lead1() {
        const int n = top() + 1;
        const auto& s = ctx_.s.masses();
        const int hi = std::min(n, ctx_.s.max_support());
        const W inv = W(1) / ctx_.s.mass(1);
        const W an1 = ctx_.a.mass(n - 1);
        const W conv = ctx_.ab.mass(n); // sum_k a_k b_{n-k}
        const bool printed = variant_ == FormulaVariant::transcribed;
        Triple<W> e; // additive extras per sequence
        if (branch_ == 2) {
            // B carries beta-hat, C carries gamma-hat
            e.b = printed ? (-an1 * ctx_.c.mass(0) - ctx_.c.mass(0) * conv)
                          : (-an1 * ctx_.c.mass(0) + ctx_.c.mass(0) * conv);
            e.c = an1;
        } else if (branch_ == 3) {
            e.a = -conv;
            e.c = conv;
        } else { // branch 4
            e.a = printed ? -conv : -an1;
            e.c = printed ? conv : an1;
        }
        Triple<W> R;
        R.a = A_[static_cast<std::size_t>(n - 2)] - conv_tail(s, 2, hi, A_, n + 1) + e.a;
        R.b = B_[static_cast<std::size_t>(n - 2)] - conv_tail(s, 2, hi, B_, n + 1) + e.b;
        R.c = C_[static_cast<std::size_t>(n - 2)] - conv_tail(s, 2, hi, C_, n + 1) + e.c;
        push({R.a * inv, R.b * inv, R.c * inv});
    }

    // s0 = s1 = 0:  phi(u+1) = ((1-s3) phi(u) - sum_{k=1}^{u-1} phi(k) s_{u+3-k} + extra) / s2
    void step_forward() {
        const int n = top() + 1; // defines phi(n), u = n-1
        const int u = n - 1;
        const auto& s = ctx_.s.masses();
        const W inv = W(1) / ctx_.s.mass(2);
        const bool printed = variant_ == FormulaVariant::transcribed;
        const bool plus_sign = (branch_ == 7 || branch_ == 10) && printed;

        const int hi = std::min(u + 2, ctx_.s.max_support());
        // sum_{k=1}^{u-1} phi(k) s_{u+3-k} = sum_{m=4}^{u+2} s_m phi(u+3-m)
        W tail_c = conv_tail(s, 4, hi, C_, u + 3);
        W v = (W(1) - ctx_.s.mass(3)) * C_[static_cast<std::size_t>(u)] + (plus_sign ? tail_c : -tail_c);
        switch (branch_) {
            case 5: case 9:
                v += ctx_.c.mass(0) * C_[1] * ctx_.ab.mass(u + 2);
                break;
            case 6:
                v += (ctx_.a.mass(u + 1) * ctx_.b.mass(0)) * ctx_.c.mass(1) * C_[1];
                break;
            case 8:
                if (printed) {
                    v += ctx_.c.mass(0) * C_[1] * ctx_.ab.mass(u + 2);
                } else {
                    v += (ctx_.a.mass(u + 1) * ctx_.b.mass(0)) * ctx_.c.mass(0) * C_[2];
                }
                break;
            default: break; // 7, 10: no extra term
        }
        push({W(0), W(0), v * inv});
    }

    const Ctx<W>& ctx_;
    FormulaVariant variant_;
    int branch_ = 0;
    std::vector<W> A_, B_, C_;
    std::vector<Triple<W>> constraints_;
    bool overflow_ = false;
};

// ---------------------------------------------------------------------------
// far-field closure and diagnostics

template <class W>
struct LinRow {
    W p{0}, q{0}, rhs{0}; // p*phi0 + q*phi1 = rhs
};

template <class W>
struct CoreResult {
    W phi0{}, phi1{};
    int boundary = 0;
    bool ill_conditioned = false;
};

// Reduce engine constraints to independent rows (rank <= 2).
template <class W>
std::vector<LinRow<W>> reduce_constraints(const std::vector<Triple<W>>& cons, const W& drift, const W& tol) {
    std::vector<LinRow<W>> rows;
    for (const auto& c : cons) rows.push_back({c.a, c.b, -c.c * drift});
    std::vector<LinRow<W>> out;
    // eliminate p with the largest pivot, then q
    auto pick = [&](auto key) -> std::optional<std::size_t> {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const W v = scalar_abs(key(rows[i]));
            if (v <= tol) continue;
            if (!best || v > scalar_abs(key(rows[*best]))) best = i;
        }
        return best;
    };
    if (auto i = pick([](const LinRow<W>& r) { return r.p; })) {
        LinRow<W> piv = rows[*i];
        out.push_back(piv);
        for (auto& r : rows) {
            if (r.p == W(0)) continue;
            const W f = r.p / piv.p;
            r.p = W(0); r.q -= f * piv.q; r.rhs -= f * piv.rhs;
        }
        rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(*i));
    }
    if (auto i = pick([](const LinRow<W>& r) { return r.q; })) {
        out.push_back(rows[*i]);
    }
    return out;
}

template <class W, class Engine>
CoreResult<W> far_field_solve(Engine& eng, const std::vector<LinRow<W>>& fixed, int N) {
    const W drift = eng.ctx().drift;
    auto boundary_row = [&](int n) -> LinRow<W> {
        return {eng.A()[static_cast<std::size_t>(n)], eng.B()[static_cast<std::size_t>(n)],
                W(1) - eng.C()[static_cast<std::size_t>(n)] * drift};
    };
    const int need = 2 - static_cast<int>(fixed.size());
    for (int offset = 0; offset <= 2; ++offset) {
        eng.extend(N + offset + std::max(need, 1));
        std::array<LinRow<W>, 2> rows;
        std::size_t idx = 0;
        for (const auto& r : fixed) rows[idx++] = r;
        for (int k = 0; idx < 2; ++k) rows[idx++] = boundary_row(N + offset + k);
        const W det = rows[0].p * rows[1].q - rows[1].p * rows[0].q;
        auto norm = [](const LinRow<W>& r) { return scalar_abs(r.p) + scalar_abs(r.q); };
        const W scale = norm(rows[0]) * norm(rows[1]);
        if (scale == W(0) || scalar_abs(det) < W(1e-30) * scale) continue; // retry with shifted boundary
        CoreResult<W> res;
        res.phi0 = (rows[0].rhs * rows[1].q - rows[1].rhs * rows[0].q) / det;
        res.phi1 = (rows[0].p * rows[1].rhs - rows[1].p * rows[0].rhs) / det;
        res.boundary = N + offset;
        return res;
    }
    CoreResult<W> res;
    res.ill_conditioned = true;
    return res;
}

template <class W>
struct Solution {
    std::vector<W> raw; // phi(0..u_top)
    std::vector<W> clamped;
    W phi0{}, phi1{};
    int boundary = 0;
    W trailing{}, resid_drift{}, resid_step{}, clamp_move{}, monotone_violation{};
    // whole-range scan (n = 0..boundary+1), used to detect precision loss
    W scan_monotone{}, scan_clamp{};
    // worst coefficient magnitude in the trailing window; |phi(n)-1| there is
    // only credible when window_mag * eps is small
    W window_mag{};
};

template <class W, class Engine>
Solution<W> evaluate_solution(Engine& eng, const CoreResult<W>& core, int u_max) {
    const auto& ctx = eng.ctx();
    Solution<W> out;
    out.phi0 = core.phi0;
    out.phi1 = core.phi1;
    out.boundary = core.boundary;
    const int u_top = std::max(u_max, 3);
    eng.extend(std::max(u_top, core.boundary + 1));
    auto phi_at = [&](int n) {
        return eng.A()[static_cast<std::size_t>(n)] * core.phi0 + eng.B()[static_cast<std::size_t>(n)] * core.phi1 +
               eng.C()[static_cast<std::size_t>(n)] * ctx.drift;
    };

    W prev(0);
    for (int n = 0; n <= core.boundary + 1; ++n) {
        const W v = phi_at(n);
        if (n > 0) {
            const W d = prev - v;
            if (d > out.scan_monotone) out.scan_monotone = d;
        }
        prev = v;
        const W excess = v < W(0) ? W(-v) : (v > W(1) ? W(v - W(1)) : W(0));
        if (excess > out.scan_clamp) out.scan_clamp = excess;
        if (n >= core.boundary - 3) {
            const W d = scalar_abs(v - W(1));
            if (d > out.trailing) out.trailing = d;
            const W mag = scalar_abs(eng.A()[static_cast<std::size_t>(n)]) +
                          scalar_abs(eng.B()[static_cast<std::size_t>(n)]) +
                          scalar_abs(eng.C()[static_cast<std::size_t>(n)] * ctx.drift);
            if (mag > out.window_mag) out.window_mag = mag;
        }
    }

    out.raw.resize(static_cast<std::size_t>(u_top) + 1);
    for (int n = 0; n <= u_top; ++n) out.raw[static_cast<std::size_t>(n)] = phi_at(n);
    out.clamped = out.raw;
    for (auto& x : out.clamped) {
        const W lo = x < W(0) ? W(-x) : W(0);
        const W hi = x > W(1) ? W(x - W(1)) : W(0);
        const W move = lo > hi ? lo : hi;
        if (move > out.clamp_move) out.clamp_move = move;
        x = x < W(0) ? W(0) : (x > W(1) ? W(1) : x);
    }
    for (int n = 0; n + 1 <= u_top; ++n) {
        const W d = out.raw[static_cast<std::size_t>(n)] - out.raw[static_cast<std::size_t>(n + 1)];
        if (d > out.monotone_violation) out.monotone_violation = d;
    }
    // drift identity on the clamped values
    {
        const auto& f = out.clamped;
        const W rhs = f[0] + ctx.b0c0 * f[2] + ctx.b0c1 * f[1] + ctx.c0 * f[1];
        out.resid_drift = scalar_abs(ctx.drift - rhs);
    }
    // step identity on the clamped values
    for (int u = 0; u + 3 <= u_top; ++u) {
        const auto& f = out.clamped;
        W acc(0);
        const int klo = std::max(0, u + 2 - ctx.s.max_support());
        for (int k = klo; k <= u + 2; ++k) acc += ctx.s.mass(u + 2 - k) * f[static_cast<std::size_t>(k + 1)];
        const W au1 = ctx.a.mass(u + 1);
        acc -= au1 * ctx.b0c0 * f[2] + au1 * ctx.b0c1 * f[1] + ctx.c0 * f[1] * ctx.ab.mass(u + 2);
        const W r = scalar_abs(f[static_cast<std::size_t>(u)] - acc);
        if (r > out.resid_step) out.resid_step = r;
    }
    return out;
}

// Full solve in one working precision. Returns nullopt when the rung ran out
// of bits (overflow, noisy self-checks, or a trailing window it cannot
// certify) and the next rung should be tried.
template <class W, template <class> class Engine>
std::optional<Solution<W>> solve_in_precision(const SeasonalModel<W>& model, const SolveOptions& opts,
                                              int& branch_out, bool is_last_rung) {
    const Ctx<W> ctx(model);
    Engine<W> eng(ctx, opts.variant);
    branch_out = [&] {
        if constexpr (std::is_same_v<Engine<W>, BranchEngine<W>>) return eng.branch();
        else return theorem5_branch(model);
    }();

    const W pivot_tol = scalar_traits<W>::is_exact ? W(0) : W(1e-13);
    const bool adaptive = !opts.boundary_index.has_value();
    int N = opts.boundary_index.value_or(250);
    const int n_cap = 16384;

    std::optional<W> prev_phi0;
    while (true) {
        eng.extend(N + 3);
        if (eng.overflowed()) return std::nullopt;
        const auto fixed = reduce_constraints(eng.constraints(), ctx.drift, pivot_tol);
        if (fixed.size() > 2) throw SolverError("constraint system over-determined");
        const CoreResult<W> core = far_field_solve(eng, fixed, N);
        if (core.ill_conditioned) {
            if (is_last_rung || scalar_traits<W>::is_exact) throw IllConditionedBoundary{};
            return std::nullopt;
        }
        auto sol = evaluate_solution(eng, core, opts.u_max);

        bool bad = !scalar_traits<W>::finite(sol.scan_clamp) || !scalar_traits<W>::finite(sol.scan_monotone);
        for (const auto& x : sol.raw) bad = bad || !scalar_traits<W>::finite(x);
        if constexpr (!scalar_traits<W>::is_exact) {
            // |phi(n)-1| near the boundary is meaningless once coefficient
            // magnitudes eat the working precision
            const W eps = std::numeric_limits<W>::epsilon();
            bad = bad || sol.window_mag * eps > W(1e-8);
        }
        // whole-range wiggles up to ~the trailing residual are the far-field
        // closure itself, not precision loss; N-doubling handles those
        const W scan_slack = W(1e-6) + W(4) * sol.trailing;
        const bool noisy = bad || sol.resid_step > W(1e-9) || sol.resid_drift > W(1e-9) ||
                           sol.clamp_move > W(1e-6) || sol.monotone_violation > W(1e-12) ||
                           sol.scan_monotone > scan_slack || sol.scan_clamp > scan_slack;
        if (noisy) {
            if (scalar_traits<W>::is_exact) throw SolverError("exact solve failed self-checks");
            return std::nullopt;
        }
        if (adaptive) {
            const bool stable = prev_phi0 && scalar_abs(sol.raw[0] - *prev_phi0) < W(1e-10);
            const bool converged = sol.trailing <= W(1e-6);
            if ((stable && converged) || N >= n_cap) return sol;
            prev_phi0 = sol.raw[0];
            N = std::min(N * 2, n_cap);
            continue;
        }
        return sol;
    }
}

template <class S, class W, class Sol>
SurvivalVector<S> package_solution(const Sol& sol, int u_max, int branch, int bits, int escalations) {
    SurvivalVector<S> out;
    out.branch_id = branch;
    out.boundary_index = sol.boundary;
    out.precision_bits = bits;
    out.escalations = escalations;
    auto cv = [](const W& x) { return static_cast<S>(x); };
    for (int u = 0; u <= u_max; ++u) {
        out.phi_raw.push_back(cv(sol.raw[static_cast<std::size_t>(u)]));
        out.phi.push_back(cv(sol.clamped[static_cast<std::size_t>(u)]));
    }
    // rounding to the report scalar may reintroduce 1-ulp wiggles; smooth them
    for (std::size_t u = 1; u < out.phi.size(); ++u)
        if (out.phi[u] < out.phi[u - 1]) out.phi[u] = out.phi[u - 1];
    for (const S& f : out.phi) out.psi.push_back(S(1) - f);
    out.residual = cv(sol.trailing);
    out.resid_drift = cv(sol.resid_drift);
    out.resid_step = cv(sol.resid_step);
    out.clamp_move = cv(sol.clamp_move);
    out.monotone_violation = cv(sol.monotone_violation);
    out.clamp_warning = sol.clamp_move > W(1e-6);
    return out;
}

template <template <class> class Engine, class S>
SurvivalVector<S> solve_ultimate(const SeasonalModel<S>& model, const SolveOptions& opts) {
    if (model.period() != 3) throw WrongPeriod(model.period());
    if (classify_net_profit(model).kind != NetProfitKind::Subcritical) throw NotSubcritical{};

    if constexpr (scalar_traits<S>::is_exact) {
        int branch = 0;
        auto sol = solve_in_precision<S, Engine>(model, opts, branch, true);
        if (!sol) throw PrecisionExhausted{};
        return package_solution<S, S>(*sol, opts.u_max, branch, 0, 0);
    } else {
        static_assert(std::is_same_v<S, double>, "float-lane entry point is double");
        int esc = 0;
        auto attempt = [&]<class W>(std::type_identity<W>, bool last) -> std::optional<SurvivalVector<S>> {
            int branch = 0;
            const SeasonalModel<W> mw = model.template convert<W>();
            auto sol = solve_in_precision<W, Engine>(mw, opts, branch, last);
            if (!sol) return std::nullopt;
            return package_solution<S, W>(*sol, opts.u_max, branch, scalar_traits<W>::bits, esc);
        };
        if (auto r = attempt(std::type_identity<double>{}, !opts.precision_escalation)) return *r;
        if (!opts.precision_escalation) throw PrecisionExhausted{};
        ++esc;
        if (auto r = attempt(std::type_identity<Float128>{}, false)) return *r;
        ++esc;
        if (auto r = attempt(std::type_identity<Float256>{}, false)) return *r;
        ++esc;
        if (auto r = attempt(std::type_identity<Float512>{}, false)) return *r;
        ++esc;
        if (auto r = attempt(std::type_identity<Float1024>{}, false)) return *r;
        ++esc;
        if (auto r = attempt(std::type_identity<Float2048>{}, false)) return *r;
        ++esc;
        if (auto r = attempt(std::type_identity<Float4096>{}, true)) return *r;
        throw PrecisionExhausted{};
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// public solvers

template <class S>
SurvivalVector<S> ultimate_branch(const SeasonalModel<S>& model, const SolveOptions& opts = {}) {
    return detail::solve_ultimate<detail::BranchEngine>(model, opts);
}

template <class S>
SurvivalVector<S> ultimate_generic(const SeasonalModel<S>& model, const SolveOptions& opts = {}) {
    return detail::solve_ultimate<detail::GenericEngine>(model, opts);
}

// Homogeneous model (period 1), the classical recursion:
//   psi(0) = E Z
//   z0 psi(u) = sum_{j=1}^{u-1} (1-F(j)) psi(u-j) + sum_{j>=u} (1-F(j))
// where the infinite tail sum is folded through sum_{j>=0} (1-F(j)) = E Z,
// which keeps it exact under truncation.
template <class S>
SurvivalVector<S> homogeneous_ultimate(const Pmf<S>& claim, int u_max) {
    if (!(claim.mean() < S(1))) throw NetProfitViolated{};
    const S z0 = claim.mass(0); // positive, since E Z < 1 forces an atom at 0

    std::vector<S> tail(static_cast<std::size_t>(u_max) + 1);
    {
        S prefix(0);
        for (int j = 0; j <= u_max; ++j) {
            prefix += claim.mass(j);
            tail[static_cast<std::size_t>(j)] = S(1) - prefix;
        }
    }
    std::vector<S> psi(static_cast<std::size_t>(u_max) + 1);
    psi[0] = claim.mean();
    S tailsum = claim.mean(); // sum_{j >= u} (1 - F(j)), at u = 0
    for (int u = 1; u <= u_max; ++u) {
        tailsum -= tail[static_cast<std::size_t>(u - 1)];
        if (tailsum < S(0)) tailsum = S(0);
        S acc = tailsum;
        for (int j = 1; j < u; ++j) acc += tail[static_cast<std::size_t>(j)] * psi[static_cast<std::size_t>(u - j)];
        psi[static_cast<std::size_t>(u)] = acc / z0;
    }

    SurvivalVector<S> out;
    out.branch_id = 0;
    out.boundary_index = u_max;
    out.precision_bits = scalar_traits<S>::bits;
    for (int u = 0; u <= u_max; ++u) {
        const S p = psi[static_cast<std::size_t>(u)];
        const S raw = S(1) - p;
        out.phi_raw.push_back(raw);
        S f = raw;
        if (f < S(0)) f = S(0);
        if (f > S(1)) f = S(1);
        const S move = scalar_abs(f - raw);
        if (move > out.clamp_move) out.clamp_move = move;
        out.phi.push_back(f);
        out.psi.push_back(S(1) - f);
    }
    out.residual = scalar_abs(S(1) - out.phi_raw.back());
    return out;
}

} // namespace ruin
