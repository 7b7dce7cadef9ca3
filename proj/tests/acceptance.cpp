// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code 0 iff all pass.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "ruin/finite_time.hpp"
#include "ruin/model_io.hpp"
#include "ruin/oracle.hpp"
#include "ruin/tabulate.hpp"
#include "ruin/ultimate.hpp"

using namespace ruin;

namespace {

int failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int idx, const char* name, bool ok, const std::string& detail) {
    std::printf("criterion %d [%s] %s  (%s)\n", idx, ok ? "PASS" : "FAIL", name, detail.c_str());
    if (!ok) ++failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// ---------------------------------------------------------------- 1..3
void table_reproduction(int idx, const GoldenTable& golden, double time_budget_s) {
    Timer timer;
    auto m = ModelSpec::parse(golden.model_json).to_float_model();
    auto mat = finite_time_ruin(m, 20, 20, 0);
    SolveOptions opts;
    opts.u_max = 20;
    auto sv = ultimate_branch(m, opts);
    std::vector<double> ult(sv.psi.begin(), sv.psi.end());
    auto table = make_table(mat, &ult);
    const auto bad = compare_to_golden(golden, table);
    const double secs = timer.seconds();
    std::string detail = fmt("%zu/144 cells off, %.2fs, boundary N=%d, %d-bit рrecision", bad.size(), secs,
                             sv.boundary_index, sv.precision_bits);
    for (std::size_t i = 0; i < bad.size() && i < 3; ++i)
        detail += fmt("; T=%d u=%d printed=%g got=%g", bad[i].t, bad[i].u, bad[i].printed, bad[i].computed);
    report(idx, (golden.name + " reproduction").c_str(), bad.empty() && secs < time_budget_s, detail);
}

// ---------------------------------------------------------------- 4
void exact_oracle_equivalence() {
    Timer timer;
    SplitMix64 rng(424242);
    int models = 0, cells = 0;
    bool ok = true;
    while (models < 50) {
        auto gs = corpus::random_model_grids(rng, 3);
        auto m = corpus::model_from_grids<Rational>(gs);
        ++models;
        auto mat = finite_time_ruin(m, 4, 6, 0);
        for (int u = 0; u <= 4 && ok; ++u)
            for (int T = 1; T <= 6; ++T, ++cells)
                if (mat.at(u, T) != enumerate_finite_time(m, u, T)) { ok = false; break; }
        if (!ok) break;
    }
    const double secs = timer.seconds();
    report(4, "exact-oracle equivalence", ok && secs < 60.0,
           fmt("%d models, %d cells, exact rational equality, %.2fs", models, cells, secs));
}

// ---------------------------------------------------------------- 5 (+8)
struct CorpusSolve {
    SeasonalModel<double> model;
    int branch;
    SurvivalVector<double> branch_sol;
    SurvivalVector<double> generic_sol;
};

std::vector<CorpusSolve> solve_corpus() {
    std::vector<CorpusSolve> out;
    SplitMix64 rng(171717);
    SolveOptions opts;
    opts.u_max = 30;
    for (int br = 1; br <= 10; ++br) {
        for (int k = 0; k < 5; ++k) {
            auto gs = corpus::random_branch_grids(rng, br);
            auto m = corpus::model_from_grids<double>(gs);
            auto sb = ultimate_branch(m, opts);
            auto sg = ultimate_generic(m, opts);
            out.push_back({m, br, std::move(sb), std::move(sg)});
        }
    }
    return out;
}

void cross_solver_equivalence(const std::vector<CorpusSolve>& corpus_solves) {
    bool ok = corpus_solves.size() >= 50;
    double worst = 0;
    int worst_branch = 0;
    for (const auto& cs : corpus_solves) {
        if (cs.branch_sol.branch_id != cs.branch) ok = false;
        for (int u = 0; u <= 30; ++u) {
            const double d = std::abs(cs.branch_sol.phi[static_cast<std::size_t>(u)] -
                                      cs.generic_sol.phi[static_cast<std::size_t>(u)]);
            if (d > worst) { worst = d; worst_branch = cs.branch; }
        }
    }
    ok = ok && worst <= 1e-9;

    // arbitration report for the three disputed transcriptions: the validated
    // recursions match the generic solver and simulation; the transcribed
    // originals do not
    std::string arb = "arbitration:";
    SplitMix64 rng(818181);
    SolveOptions val;
    val.u_max = 6;
    SolveOptions tr = val;
    tr.variant = FormulaVariant::transcribed;
    struct Item { const char* tag; int branch; };
    for (const Item item : {Item{"step-sign", 7}, Item{"seed-case8", 8}, Item{"coef-sum", 2}}) {
        auto m = corpus::model_from_grids<double>(corpus::random_branch_grids(rng, item.branch));
        auto gen = ultimate_generic(m, val);
        double d_tr = -1;
        try {
            auto t = ultimate_branch(m, tr);
            d_tr = 0;
            for (int u = 0; u <= 6; ++u)
                d_tr = std::max(d_tr, std::abs(t.phi_raw[static_cast<std::size_t>(u)] -
                                               gen.phi_raw[static_cast<std::size_t>(u)]));
        } catch (const SolverError&) {
            // transcribed recursion diverged
        }
        auto mc = mc_ultimate_proxy(m, 1, 200000, 99, 2000);
        const double d_mc = std::abs(mc.p_hat - gen.psi[1]);
        const bool mc_sides_with_generic = d_mc <= 4 * mc.std_err + 0.005;
        ok = ok && mc_sides_with_generic;
        arb += fmt(" %s(branch %d): |transcribed-generic|=%s, |mc-generic|=%.2e ->%s generic;", item.tag,
                   item.branch, d_tr < 0 ? "divergent" : fmt("%.2e", d_tr).c_str(), d_mc,
                   mc_sides_with_generic ? "" : " NOT");
    }
    report(5, "cross-solver equivalence",
           ok, fmt("%zu models over all 10 branches, max |branch-generic| = %.2e (branch %d); %s",
                   corpus_solves.size(), worst, worst_branch, arb.c_str()));
}

// ---------------------------------------------------------------- 6
void homogeneous_consistency() {
    SplitMix64 rng(606060);
    SolveOptions opts;
    opts.u_max = 50;
    double worst = 0;
    for (int it = 0; it < 10; ++it) {
        auto g = corpus::random_light_claim(rng);
        auto z = corpus::pmf_from_grid<double>(g);
        auto hom = homogeneous_ultimate(z, 50);
        auto seas = ultimate_branch(SeasonalModel<double>({z, z, z}), opts);
        for (int u = 0; u <= 50; ++u)
            worst = std::max(worst, std::abs(hom.psi[static_cast<std::size_t>(u)] -
                                             seas.psi[static_cast<std::size_t>(u)]));
    }
    report(6, "homogeneous consistency", worst <= 1e-9, fmt("10 claims, u <= 50, max diff = %.2e", worst));
}

// ---------------------------------------------------------------- 7
void degenerate_profiles() {
    struct Case { int i, j, k, prefix; };
    const Case cases[] = {
        {3, 0, 0, 3},
        {0, 3, 0, 2}, {2, 1, 0, 2}, {1, 2, 0, 2}, {2, 0, 1, 2},
        {0, 0, 3, 1}, {0, 2, 1, 1}, {0, 1, 2, 1}, {1, 0, 2, 1}, {1, 1, 1, 1},
    };
    bool ok = true;
    for (const auto& c : cases) {
        auto m = SeasonalModel<double>({Pmf<double>::point_mass(c.i), Pmf<double>::point_mass(c.j),
                                        Pmf<double>::point_mass(c.k)});
        auto cls = classify_net_profit(m);
        if (cls.kind != NetProfitKind::CriticalDegenerate) ok = false;
        for (int u = 0; u <= 6; ++u)
            if (cls.psi(u) != (u < c.prefix ? 1.0 : 0.0)) ok = false;
    }
    auto super = SeasonalModel<double>({Pmf<double>::point_mass(2), Pmf<double>::point_mass(1),
                                        Pmf<double>::point_mass(1)});
    auto scls = classify_net_profit(super);
    ok = ok && scls.kind == NetProfitKind::Supercritical && scls.psi(0) == 1.0 && scls.psi(9) == 1.0;
    auto diffuse = SeasonalModel<double>({Pmf<double>::from_weights({0.5, 0.0, 0.5}),
                                          Pmf<double>::point_mass(1),
                                          Pmf<double>::from_weights({0.5, 0.0, 0.5})});
    auto dcls = classify_net_profit(diffuse);
    ok = ok && dcls.kind == NetProfitKind::CriticalDiffuse && dcls.psi(0) == 1.0 && dcls.psi(9) == 1.0;
    report(7, "degenerate profile suite", ok, "10 point-mass patterns + supercritical + critical-diffuse");
}

// ---------------------------------------------------------------- 8
void identity_residuals(const std::vector<CorpusSolve>& corpus_solves) {
    double worst_step = 0, worst_drift = 0, worst_residual = 0, worst_mono = 0;
    for (const auto& cs : corpus_solves) {
        for (const auto* sv : {&cs.branch_sol, &cs.generic_sol}) {
            worst_step = std::max(worst_step, sv->resid_step);
            worst_drift = std::max(worst_drift, sv->resid_drift);
            worst_residual = std::max(worst_residual, sv->residual);
            for (std::size_t u = 1; u < sv->phi.size(); ++u)
                worst_mono = std::max(worst_mono, sv->phi[u - 1] - sv->phi[u]);
        }
    }
    const bool ok = worst_step <= 1e-9 && worst_drift <= 1e-9 && worst_residual <= 1e-6 && worst_mono <= 0.0;
    report(8, "identity residuals", ok,
           fmt("step<=%.1e drift<=%.1e far-field<=%.1e monotone violation<=%.1e", worst_step, worst_drift,
               worst_residual, worst_mono));
}

// ---------------------------------------------------------------- 9
void mc_statistical_check() {
    Timer timer;
    double worst = 0;
    const std::int64_t n_paths = 1000000;
    std::uint64_t cell = 0;
    for (const auto& golden : golden_tables()) {
        auto m = ModelSpec::parse(golden.model_json).to_float_model();
        auto mat = finite_time_ruin(m, 8, 20, 0);
        for (int u : {0, 1, 2, 4, 8}) {
            for (int T : {1, 2, 5, 10, 20}) {
                const double psi = mat.at(u, T);
                auto est = mc_finite_time(m, u, T, n_paths, substream_seed(20250810, cell++));
                const double se = std::max(std::sqrt(psi * (1 - psi) / static_cast<double>(n_paths)),
                                           0.5 / static_cast<double>(n_paths));
                worst = std::max(worst, std::abs(est.p_hat - psi) / se);
            }
        }
    }
    const double secs = timer.seconds();
    report(9, "mc statistical check", worst <= 4.0 && secs < 120.0,
           fmt("3 models x 5x5 grid, 1e6 paths each, max |z| = %.2f, %.1fs", worst, secs));
}

} // namespace

int main() {
    std::printf("acceptance suite (kernel variant: %s)\n", kernels::active_variant().c_str());
    table_reproduction(1, golden_tables()[0], 5.0);
    table_reproduction(2, golden_tables()[1], 30.0);
    table_reproduction(3, golden_tables()[2], 30.0);
    exact_oracle_equivalence();
    const auto corpus_solves = solve_corpus();
    cross_solver_equivalence(corpus_solves);
    homogeneous_consistency();
    degenerate_profiles();
    identity_residuals(corpus_solves);
    mc_statistical_check();
    if (failures == 0) std::printf("all criteria passed\n");
    else std::printf("%d criteria FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
