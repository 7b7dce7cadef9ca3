#pragma once

#include <stdexcept>
#include <string>

namespace ruin {

// Exit-code classes used by the CLI; library code throws, the CLI maps.
enum class ErrorClass : int {
    Parse = 2,
    Solver = 3,
    GoldenMismatch = 4,
    OracleDisagreement = 5,
};

struct RuinError : std::runtime_error {
    ErrorClass cls;
    RuinError(ErrorClass c, const std::string& what) : std::runtime_error(what), cls(c) {}
};

struct ParseError : RuinError {
    explicit ParseError(const std::string& w) : RuinError(ErrorClass::Parse, w) {}
};
struct SolverError : RuinError {
    explicit SolverError(const std::string& w) : RuinError(ErrorClass::Solver, w) {}
};

// pmf construction
struct EmptyWeights : ParseError { EmptyWeights() : ParseError("weights: empty vector") {} };
struct NegativeWeight : ParseError { NegativeWeight() : ParseError("weights: negative entry") {} };
struct ZeroTotal : ParseError { ZeroTotal() : ParseError("weights: total mass is zero") {} };
struct InvalidParameter : ParseError { explicit InvalidParameter(const std::string& w) : ParseError(w) {} };

// finite-time / ultimate
struct InvalidSeasonIndex : SolverError { explicit InvalidSeasonIndex(int j) : SolverError("invalid season index " + std::to_string(j)) {} };
struct WrongPeriod : SolverError { explicit WrongPeriod(int m) : SolverError("ultimate solvers require period 3, got " + std::to_string(m)) {} };
struct NotSubcritical : SolverError { NotSubcritical() : SolverError("model is not subcritical (E S >= 3)") {} };
struct NoBranchMatched : SolverError { NoBranchMatched() : SolverError("zero pattern matches no Theorem-5 branch (unreachable under E S < 3)") {} };
struct IllConditionedBoundary : SolverError { IllConditionedBoundary() : SolverError("far-field boundary system is ill-conditioned") {} };
struct PrecisionExhausted : SolverError { PrecisionExhausted() : SolverError("coefficient magnitudes exceed the safe range of every precision rung") {} };
struct NetProfitViolated : SolverError { NetProfitViolated() : SolverError("claim mean E Z >= 1") {} };

// oracle
struct RefuseTooLarge : SolverError { RefuseTooLarge() : SolverError("enumeration state space exceeds 1e8 tuples") {} };
struct InfiniteSupport : SolverError { InfiniteSupport() : SolverError("enumeration requires finite-support seasons (tail_deficit = 0)") {} };

// cli
struct GoldenMismatch : RuinError { explicit GoldenMismatch(const std::string& w) : RuinError(ErrorClass::GoldenMismatch, w) {} };
struct OracleDisagreement : RuinError { explicit OracleDisagreement(const std::string& w) : RuinError(ErrorClass::OracleDisagreement, w) {} };

} // namespace ruin
