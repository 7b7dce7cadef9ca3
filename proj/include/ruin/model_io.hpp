#pragma once

// Model file format (JSON):
//   {
//     "seasons": [ {"weights": ["0.5", "0.25", 0.25]},
//                  {"poisson": 0.5},
//                  {"geometric": 0.75} ],
//     "tail_eps": 1e-12,
//     "mode": "float" | "exact"
//   }
// Weights may be JSON numbers or strings; strings permit exact-rational
// parsing ("0.25" -> 1/4, "1/3"). Exact mode requires finite-support weight
// seasons whose entries are integers or quoted literals.

#include <string>
#include <variant>
#include <vector>

#include "ruin/pmf.hpp"

namespace ruin {

enum class NumericMode { Float, Exact };

struct WeightEntry {
    std::string literal;
    bool quoted = false;
};

struct WeightSeason { std::vector<WeightEntry> weights; };
struct PoissonSeason { double lambda = 0; };
struct GeometricSeason { double p = 0; };
using SeasonSpec = std::variant<WeightSeason, PoissonSeason, GeometricSeason>;

struct ModelSpec {
    std::vector<SeasonSpec> seasons;
    double tail_eps = 1e-12;
    NumericMode mode = NumericMode::Float;

    static ModelSpec parse(const std::string& json_text);
    static ModelSpec load_file(const std::string& path);

    bool has_parametric() const;
    SeasonalModel<double> to_float_model() const;
    SeasonalModel<Rational> to_exact_model() const; // throws ParseError for parametric seasons
    std::string to_json() const;
};

} // namespace ruin
