#pragma once

// Ruin-probability table assembly and output formats. Layout mirrors the
// reference tables: one row per horizon T (plus a final "inf" row), one
// column per initial surplus u. CSV cells carry full precision; pretty cells
// are rounded half-away-from-zero to three decimals.

#include <optional>
#include <string>
#include <vector>

#include "ruin/finite_time.hpp"
#include "ruin/ultimate.hpp"

namespace ruin {

struct RuinTable {
    std::vector<int> u_values;
    std::vector<int> t_values; // -1 encodes the "inf" row
    std::vector<std::vector<double>> cells;

    std::optional<double> lookup(int u, int t) const;
};

RuinTable make_table(const RuinMatrix<double>& matrix, const std::vector<double>* ultimate_psi);

std::string to_csv(const RuinTable& table);
std::string to_pretty(const RuinTable& table);
RuinTable parse_csv(const std::string& text);

std::string format_full(double x);   // round-trippable decimal
std::string format_3dec(double x);   // three decimals, half away from zero

// Golden reference data: the three example models and their printed tables.
struct GoldenCell {
    int t;       // -1 = inf
    int u;
    double printed;
};

struct GoldenTable {
    std::string name;
    std::string model_json;
    std::vector<int> u_values;
    std::vector<int> t_values;
    std::vector<std::vector<const char*>> cells; // printed strings, row-major
};

const std::vector<GoldenTable>& golden_tables();

struct GoldenDiff {
    int t = 0, u = 0;
    double printed = 0, computed = 0;
};

// cells within 5e-4 (inclusive) of the printed values pass
std::vector<GoldenDiff> compare_to_golden(const GoldenTable& golden, const RuinTable& computed);

} // namespace ruin
