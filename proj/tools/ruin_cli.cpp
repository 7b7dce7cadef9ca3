// ruin: finite-time and ultimate ruin probabilities for periodic-claim
// discrete-time risk models.
//
// Subcommands: compute, tables, mc-check, classify. Exit codes: 0 success,
// 2 parse error, 3 solver error, 4 golden mismatch, 5 oracle disagreement.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "ruin/kernels.hpp"
#include "ruin/model_io.hpp"
#include "ruin/oracle.hpp"
#include "ruin/tabulate.hpp"
#include "ruin/ultimate.hpp"

namespace {

using nlohmann::json;
using namespace ruin;

struct CommonOpts {
    std::string model_path;
    int u_max = 20;
    int t_max = 20;
    std::string format = "pretty";
    std::string output;
    std::string mode; // empty = take from the model file
    std::string boundary = "adaptive";
    bool transcribed = false;
    std::uint64_t seed = 42;
    std::int64_t paths = 100000;
    std::string out_dir = ".";
};

NumericMode effective_mode(const ModelSpec& spec, const std::string& override_mode) {
    if (override_mode == "float") return NumericMode::Float;
    if (override_mode == "exact") return NumericMode::Exact;
    if (override_mode.empty()) return spec.mode;
    throw ParseError("mode must be float or exact");
}

SolveOptions solve_options(const CommonOpts& o) {
    SolveOptions s;
    s.u_max = o.u_max;
    if (o.boundary != "adaptive") {
        try {
            s.boundary_index = std::stoi(o.boundary);
        } catch (...) {
            throw ParseError("--boundary expects an integer or \"adaptive\"");
        }
        if (*s.boundary_index < 4) throw ParseError("--boundary must be >= 4");
    }
    s.variant = o.transcribed ? FormulaVariant::transcribed : FormulaVariant::validated;
    return s;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open output file: " + path);
    out << text;
}

// psi table plus the ultimate row and solver metadata, in either numeric mode
struct ComputeResult {
    RuinTable table;
    json meta;
};

template <class S>
ComputeResult compute_with(const SeasonalModel<S>& model, const CommonOpts& o) {
    ComputeResult res;
    const auto matrix = finite_time_ruin(model, o.u_max, o.t_max, 0);

    RuinMatrix<double> as_double;
    as_double.start_season = 0;
    for (const auto& row : matrix.psi) {
        std::vector<double> r;
        for (const auto& v : row) r.push_back(scalar_traits<S>::to_double(v));
        as_double.psi.push_back(std::move(r));
    }

    res.meta["mode"] = scalar_traits<S>::is_exact ? "exact" : "float";
    res.meta["kernel"] = kernels::active_variant();

    std::vector<double> ult;
    const auto cls = classify_net_profit(model);
    res.meta["net_profit_class"] = to_string(cls.kind);
    if (cls.kind == NetProfitKind::Subcritical) {
        const auto sv = ultimate_branch(model, solve_options(o));
        for (const auto& p : sv.psi) ult.push_back(scalar_traits<S>::to_double(p));
        res.meta["branch"] = sv.branch_id;
        res.meta["boundary_index"] = sv.boundary_index;
        res.meta["precision_bits"] = sv.precision_bits;
        res.meta["escalations"] = sv.escalations;
        res.meta["far_field_residual"] = scalar_traits<S>::to_double(sv.residual);
        res.meta["clamp_warning"] = sv.clamp_warning;
    } else {
        for (int u = 0; u <= o.u_max; ++u) ult.push_back(cls.psi(u));
        if (cls.pattern) res.meta["degenerate_pattern"] = *cls.pattern;
    }
    res.table = make_table(as_double, &ult);
    return res;
}

int cmd_compute(const CommonOpts& o) {
    const ModelSpec spec = ModelSpec::load_file(o.model_path);
    const NumericMode mode = effective_mode(spec, o.mode);
    ComputeResult res = mode == NumericMode::Exact ? compute_with(spec.to_exact_model(), o)
                                                   : compute_with(spec.to_float_model(), o);
    if (o.format == "csv") {
        write_output(o.output, to_csv(res.table));
    } else if (o.format == "pretty") {
        write_output(o.output, to_pretty(res.table));
    } else if (o.format == "json") {
        json j;
        j["u"] = res.table.u_values;
        j["rows"] = json::array();
        for (std::size_t r = 0; r < res.table.t_values.size(); ++r) {
            json row;
            row["t"] = res.table.t_values[r] < 0 ? json("inf") : json(res.table.t_values[r]);
            row["psi"] = res.table.cells[r];
            j["rows"].push_back(row);
        }
        j["metadata"] = res.meta;
        write_output(o.output, j.dump(2) + "\n");
    } else {
        throw ParseError("format must be csv, pretty, or json");
    }
    return 0;
}

int cmd_tables(const CommonOpts& o) {
    bool all_ok = true;
    std::string report;
    for (const auto& golden : golden_tables()) {
        const ModelSpec spec = ModelSpec::parse(golden.model_json);
        CommonOpts local = o;
        local.u_max = 20;
        local.t_max = 20;
        const ComputeResult res = compute_with(spec.to_float_model(), local);
        const std::string path = o.out_dir + "/" + golden.name + ".csv";
        write_output(path, to_csv(res.table));
        const auto bad = compare_to_golden(golden, res.table);
        if (bad.empty()) {
            report += golden.name + ": all cells within 5e-4\n";
        } else {
            all_ok = false;
            report += golden.name + ": " + std::to_string(bad.size()) + " cells off\n";
            for (const auto& d : bad) {
                report += "  T=" + (d.t < 0 ? std::string("inf") : std::to_string(d.t)) +
                          " u=" + std::to_string(d.u) + " printed=" + format_full(d.printed) +
                          " computed=" + format_full(d.computed) + "\n";
            }
        }
    }
    std::cout << report;
    if (!all_ok) throw GoldenMismatch("computed tables disagree with the golden values");
    return 0;
}

int cmd_mc_check(const CommonOpts& o) {
    const ModelSpec spec = ModelSpec::load_file(o.model_path);
    const auto model = spec.to_float_model();
    const std::vector<int> us{0, 1, 2, 4, 8};
    const std::vector<int> ts{1, 2, 5, 10, 20};
    const auto matrix = finite_time_ruin(model, 8, 20, 0);
    double worst = 0;
    std::printf("%4s %4s %12s %12s %8s\n", "u", "T", "psi", "p_hat", "z");
    std::uint64_t cell = 0;
    for (int u : us) {
        for (int T : ts) {
            const double psi = matrix.at(u, T);
            const auto est = mc_finite_time(model, u, T, o.paths, substream_seed(o.seed, cell++));
            const double se0 = std::max(std::sqrt(psi * (1.0 - psi) / static_cast<double>(o.paths)),
                                        0.5 / static_cast<double>(o.paths));
            const double z = (est.p_hat - psi) / se0;
            worst = std::max(worst, std::abs(z));
            std::printf("%4d %4d %12.6f %12.6f %8.2f\n", u, T, psi, est.p_hat, z);
        }
    }
    std::printf("rng=%s paths=%lld seed=%llu max|z|=%.2f\n", rng_algorithm_id(),
                static_cast<long long>(o.paths), static_cast<unsigned long long>(o.seed), worst);
    if (worst > 4.0) throw OracleDisagreement("max |z| exceeds 4");
    return 0;
}

int cmd_classify(const CommonOpts& o) {
    const ModelSpec spec = ModelSpec::load_file(o.model_path);
    const auto model = spec.to_float_model();
    const auto cls = classify_net_profit(model);
    std::ostringstream out;
    out << to_string(cls.kind) << ", E S=" << format_full(model.mean_s());
    switch (cls.kind) {
        case NetProfitKind::Subcritical: {
            const int br = theorem5_branch(model);
            int lead = 0;
            while (model.aggregate().mass(lead) == 0.0) ++lead;
            out << ", branch " << br << " (";
            switch (br) {
                case 1: out << "s0 != 0"; break;
                case 2: out << "a0=0, b0,c0,a1 != 0"; break;
                case 3: out << "b0=0, a0,c0,b1 != 0"; break;
                case 4: out << "c0=0, a0,b0,c1 != 0"; break;
                case 5: out << "a0=b0=0, c0 != 0"; break;
                case 6: out << "a0=c0=0, b0 != 0"; break;
                case 7: out << "b0=c0=0, a0 != 0"; break;
                case 8: out << "a0=a1=0, b0,c0 != 0"; break;
                case 9: out << "b0=b1=0, a0,c0 != 0"; break;
                case 10: out << "c0=c1=0, a0,b0 != 0"; break;
            }
            out << "), leading aggregate atom s" << lead;
            break;
        }
        case NetProfitKind::CriticalDegenerate: {
            out << ", psi=(";
            for (int u = 0; u < cls.ones_prefix; ++u) out << "1,";
            out << "0,0,...)";
            break;
        }
        case NetProfitKind::Supercritical:
        case NetProfitKind::CriticalDiffuse:
            out << ", psi=1 for all u";
            break;
    }
    out << "\n";
    std::cout << out.str();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-time and ultimate ruin probabilities for periodic discrete-time risk models"};
    app.require_subcommand(1);
    CommonOpts o;

    auto* compute = app.add_subcommand("compute", "psi(u,T) table plus the ultimate row for one model");
    compute->add_option("--model", o.model_path, "model JSON file")->required();
    compute->add_option("--u-max", o.u_max, "largest initial surplus column");
    compute->add_option("--t-max", o.t_max, "largest finite horizon row");
    compute->add_option("--format", o.format, "csv | pretty | json");
    compute->add_option("--output", o.output, "write to file instead of stdout");
    compute->add_option("--mode", o.mode, "float | exact (default: model file setting)");
    compute->add_option("--boundary", o.boundary, "far-field index N, or \"adaptive\"");
    compute->add_flag("--transcribed-formulas", o.transcribed,
                      "use the uncorrected variants of the disputed recursions (diagnostics)");

    auto* tables = app.add_subcommand("tables", "emit the three reference tables and diff against goldens");
    tables->add_option("--out-dir", o.out_dir, "directory for table1.csv .. table3.csv");

    auto* mc = app.add_subcommand("mc-check", "Monte Carlo z-score check against the DP solver");
    mc->add_option("--model", o.model_path, "model JSON file")->required();
    mc->add_option("--paths", o.paths, "paths per grid cell");
    mc->add_option("--seed", o.seed, "master seed");

    auto* classify = app.add_subcommand("classify", "net-profit classification and branch dispatch");
    classify->add_option("--model", o.model_path, "model JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (compute->parsed()) return cmd_compute(o);
        if (tables->parsed()) return cmd_tables(o);
        if (mc->parsed()) return cmd_mc_check(o);
        if (classify->parsed()) return cmd_classify(o);
    } catch (const ruin::RuinError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.cls);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ruin::ErrorClass::Solver);
    }
    return 0;
}
