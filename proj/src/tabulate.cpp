#include "ruin/tabulate.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace ruin {

std::optional<double> RuinTable::lookup(int u, int t) const {
    int ci = -1, ri = -1;
    for (std::size_t i = 0; i < u_values.size(); ++i)
        if (u_values[i] == u) ci = static_cast<int>(i);
    for (std::size_t i = 0; i < t_values.size(); ++i)
        if (t_values[i] == t) ri = static_cast<int>(i);
    if (ci < 0 || ri < 0) return std::nullopt;
    return cells[static_cast<std::size_t>(ri)][static_cast<std::size_t>(ci)];
}

RuinTable make_table(const RuinMatrix<double>& matrix, const std::vector<double>* ultimate_psi) {
    RuinTable t;
    for (int u = 0; u <= matrix.u_max(); ++u) t.u_values.push_back(u);
    for (int T = 1; T <= matrix.t_max(); ++T) {
        t.t_values.push_back(T);
        t.cells.push_back(matrix.psi[static_cast<std::size_t>(T - 1)]);
    }
    if (ultimate_psi) {
        t.t_values.push_back(-1);
        t.cells.emplace_back(ultimate_psi->begin(), ultimate_psi->begin() + (matrix.u_max() + 1));
    }
    return t;
}

std::string format_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_3dec(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", round3(x));
    return buf;
}

std::string to_csv(const RuinTable& table) {
    std::ostringstream out;
    out << "u";
    for (int u : table.u_values) out << ',' << u;
    out << '\n';
    for (std::size_t r = 0; r < table.t_values.size(); ++r) {
        if (table.t_values[r] < 0) out << "inf";
        else out << table.t_values[r];
        for (double v : table.cells[r]) out << ',' << format_full(v);
        out << '\n';
    }
    return out.str();
}

std::string to_pretty(const RuinTable& table) {
    std::ostringstream out;
    out << "T\\u";
    for (int u : table.u_values) out << '\t' << u;
    out << '\n';
    for (std::size_t r = 0; r < table.t_values.size(); ++r) {
        if (table.t_values[r] < 0) out << "inf";
        else out << table.t_values[r];
        for (double v : table.cells[r]) out << '\t' << format_3dec(v);
        out << '\n';
    }
    return out.str();
}

RuinTable parse_csv(const std::string& text) {
    RuinTable t;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv: empty input");
    {
        std::istringstream hs(line);
        std::string cell;
        if (!std::getline(hs, cell, ',') || cell != "u") throw ParseError("csv: bad header");
        while (std::getline(hs, cell, ',')) t.u_values.push_back(std::stoi(cell));
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');
        t.t_values.push_back(cell == "inf" ? -1 : std::stoi(cell));
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != t.u_values.size()) throw ParseError("csv: ragged row");
        t.cells.push_back(std::move(row));
    }
    return t;
}

std::vector<GoldenDiff> compare_to_golden(const GoldenTable& golden, const RuinTable& computed) {
    std::vector<GoldenDiff> bad;
    for (std::size_t r = 0; r < golden.t_values.size(); ++r) {
        for (std::size_t c = 0; c < golden.u_values.size(); ++c) {
            const double printed = std::stod(golden.cells[r][c]);
            const auto got = computed.lookup(golden.u_values[c], golden.t_values[r]);
            if (!got) {
                bad.push_back({golden.t_values[r], golden.u_values[c], printed,
                               std::numeric_limits<double>::quiet_NaN()});
                continue;
            }
            if (std::abs(*got - printed) > 5e-4 + 1e-12)
                bad.push_back({golden.t_values[r], golden.u_values[c], printed, *got});
        }
    }
    return bad;
}

namespace {

// printed values, one string per cell; u = 0..10, 20; T = 1..10, 20, inf
const std::vector<int> kUs{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20};
const std::vector<int> kTs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, -1};

const std::vector<std::vector<const char*>> kTable1{
    {"0.5", "0.25", "0", "0", "0", "0", "0", "0", "0", "0", "0", "0"},
    {"0.65", "0.325", "0.075", "0", "0", "0", "0", "0", "0", "0", "0", "0"},
    {"0.703", "0.404", "0.128", "0.026", "0", "0", "0", "0", "0", "0", "0", "0"},
    {"0.733", "0.445", "0.169", "0.046", "0.007", "0", "0", "0", "0", "0", "0", "0"},
    {"0.751", "0.475", "0.2", "0.066", "0.014", "0.002", "0", "0", "0", "0", "0", "0"},
    {"0.768", "0.503", "0.233", "0.089", "0.026", "0.005", "0.001", "0", "0", "0", "0", "0"},
    {"0.779", "0.523", "0.256", "0.106", "0.035", "0.009", "0.002", "0", "0", "0", "0", "0"},
    {"0.788", "0.538", "0.275", "0.122", "0.045", "0.014", "0.003", "0.001", "0", "0", "0", "0"},
    {"0.796", "0.554", "0.295", "0.139", "0.056", "0.019", "0.006", "0.001", "0", "0", "0", "0"},
    {"0.802", "0.566", "0.310", "0.152", "0.065", "0.024", "0.008", "0.002", "0", "0", "0", "0"},
    {"0.836", "0.632", "0.402", "0.243", "0.138", "0.075", "0.038", "0.018", "0.008", "0.003", "0.001", "0"},
    {"0.877", "0.722", "0.541", "0.404", "0.301", "0.224", "0.167", "0.125", "0.093", "0.069", "0.052", "0.003"},
};

const std::vector<std::vector<const char*>> kTable2{
    {"0.393", "0.09", "0.014", "0.002", "0", "0", "0", "0", "0", "0", "0", "0"},
    {"0.481", "0.152", "0.037", "0.008", "0.001", "0", "0", "0", "0", "0", "0", "0"},
    {"0.535", "0.205", "0.066", "0.019", "0.005", "0.001", "0", "0", "0", "0", "0", "0"},
    {"0.549", "0.221", "0.075", "0.023", "0.006", "0.002", "0", "0", "0", "0", "0", "0"},
    {"0.562", "0.236", "0.086", "0.028", "0.009", "0.002", "0.001", "0", "0", "0", "0", "0"},
    {"0.576", "0.254", "0.099", "0.036", "0.012", "0.004", "0.001", "0", "0", "0", "0", "0"},
    {"0.581", "0.26", "0.103", "0.038", "0.013", "0.004", "0.001", "0", "0", "0", "0", "0"},
    {"0.585", "0.266", "0.109", "0.042", "0.015", "0.005", "0.002", "0.001", "0", "0", "0", "0"},
    {"0.591", "0.274", "0.115", "0.046", "0.017", "0.006", "0.002", "0.001", "0", "0", "0", "0"},
    {"0.593", "0.277", "0.118", "0.048", "0.018", "0.007", "0.002", "0.001", "0", "0", "0", "0"},
    {"0.605", "0.295", "0.134", "0.059", "0.026", "0.011", "0.005", "0.002", "0.001", "0.0003", "0.0001", "0"},
    {"0.609", "0.3", "0.139", "0.064", "0.029", "0.013", "0.006", "0.003", "0.001", "0.001", "0.0002", "0"},
};

const std::vector<std::vector<const char*>> kTable3{
    {"0.25", "0.063", "0.016", "0.004", "0.001", "0", "0", "0", "0", "0", "0", "0"},
    {"0.333", "0.111", "0.037", "0.012", "0.004", "0.001", "0", "0", "0", "0", "0", "0"},
    {"0.556", "0.34", "0.218", "0.143", "0.094", "0.063", "0.042", "0.028", "0.019", "0.012", "0.008", "0"},
    {"0.566", "0.35", "0.226", "0.149", "0.099", "0.066", "0.044", "0.029", "0.019", "0.013", "0.009", "0"},
    {"0.576", "0.362", "0.236", "0.156", "0.104", "0.069", "0.046", "0.031", "0.021", "0.014", "0.009", "0"},
    {"0.653", "0.461", "0.334", "0.243", "0.176", "0.127", "0.091", "0.065", "0.046", "0.033", "0.023", "0.001"},
    {"0.657", "0.466", "0.338", "0.247", "0.18", "0.13", "0.093", "0.067", "0.048", "0.034", "0.024", "0.001"},
    {"0.661", "0.471", "0.344", "0.252", "0.184", "0.133", "0.096", "0.069", "0.049", "0.035", "0.025", "0.001"},
    {"0.703", "0.529", "0.406", "0.312", "0.239", "0.181", "0.137", "0.102", "0.076", "0.056", "0.042", "0.002"},
    {"0.705", "0.532", "0.409", "0.315", "0.241", "0.184", "0.139", "0.104", "0.078", "0.057", "0.042", "0.002"},
    {"0.774", "0.635", "0.528", "0.438", "0.363", "0.298", "0.243", "0.197", "0.159", "0.127", "0.101", "0.008"},
    {"0.927", "0.879", "0.84", "0.803", "0.769", "0.736", "0.705", "0.675", "0.647", "0.619", "0.593", "0.385"},
};

} // namespace

const std::vector<GoldenTable>& golden_tables() {
    static const std::vector<GoldenTable> tables = [] {
        std::vector<GoldenTable> v;
        v.push_back({"table1",
                     R"({"seasons":[{"weights":["0.5","0.25","0.25"]},{"weights":["0.4","0.3","0.3"]},{"weights":["0.3","0.35","0.35"]}],"mode":"float"})",
                     kUs, kTs, kTable1});
        v.push_back({"table2",
                     R"({"seasons":[{"poisson":0.5},{"poisson":0.6666666666666666},{"poisson":0.8}],"tail_eps":1e-12,"mode":"float"})",
                     kUs, kTs, kTable2});
        v.push_back({"table3",
                     R"({"seasons":[{"geometric":0.75},{"geometric":0.6666666666666666},{"geometric":0.3333333333333333}],"tail_eps":1e-12,"mode":"float"})",
                     kUs, kTs, kTable3});
        return v;
    }();
    return tables;
}

} // namespace ruin
