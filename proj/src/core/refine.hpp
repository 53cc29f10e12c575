#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "flowpipe.hpp"
#include "monitor.hpp"
#include "sim.hpp"
#include "trace.hpp"

namespace featkit {

enum class OracleKind { Builtin, External, Hybrid };

struct RefineSettings {
    int K = 8;             // maximum transition hop count per query
    double eps = 1e-2;     // corner tolerance
    OracleKind oracle = OracleKind::Builtin;
    double time_horizon = 10.0;
    int sample_budget = 200;
    uint64_t seed = 1;

    // External solver wiring (used by External and Hybrid).
    std::string solver_path;  // empty = not configured
    double precision = 1e-3;
    int solver_sat_exit = 51;
    int solver_unsat_exit = 52;
    double solver_timeout = 60.0;
    std::string query_dir;  // per-query working directories are created here

    void check() const;
};

enum class Verdict { Sat, Unsat, Unknown };

struct Feasibility {
    Verdict verdict = Verdict::Unknown;
    std::optional<Trace> witness;        // product trace of a matching run
    std::optional<double> witness_value;
};

enum class Side { Low, High, Any };

/// One refinement session: owns the flowpipe cache (the sound "no run"
/// half), the guided sample pool (the sound "here is a run" half) and, in
/// external/hybrid mode, the per-query solver working directories.
class FeasibilityOracle {
public:
    FeasibilityOracle(const ProductModel& pm, const SimSettings& sim, const RefineSettings& rs);
    ~FeasibilityOracle();

    FeasibilityOracle(const FeasibilityOracle&) = delete;
    FeasibilityOracle& operator=(const FeasibilityOracle&) = delete;

    /// Does a run with feat in [a, b] exist within K jumps? SAT answers come
    /// with a concrete witness; UNSAT answers are backed by the flowpipe.
    Feasibility feasible(double a, double b);

    void set_preferred_side(Side s);
    int calls() const;
    const FeatureRange& reach_hull();  // accept-location feat hull (lazy)

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot form of the oracle query.
Feasibility feasible(const ProductModel& pm, double a, double b, const RefineSettings& rs,
                     const SimSettings& sim);

struct CornerResult {
    double value = 0.0;
    std::optional<Trace> witness;
    std::optional<double> witness_value;
    int calls = 0;
    bool converged = false;
};

/// Bisection toward one corner of the range, tightening the best-known
/// witness on SAT and the sound bound on UNSAT; stops at eps, on UNKNOWN, or
/// at the call cap ceil(log2(width/eps)) + 2.
CornerResult refine_corner(const ProductModel& pm, const FeatureRange& range, Side side,
                           const RefineSettings& rs, const SimSettings& sim);

struct RefinedRange {
    double lo_star = 0.0;
    double hi_star = 0.0;
    std::optional<Trace> lo_witness, hi_witness;
    std::optional<double> lo_witness_value, hi_witness_value;
    int iterations = 0;  // total oracle calls
    bool lo_converged = false;
    bool hi_converged = false;
    bool failed = false;  // no witness anywhere: the initial range is returned unchanged
};

/// Both corners, refined concurrently with independent oracle sessions.
RefinedRange refine_range(const ProductModel& pm, const FeatureRange& range,
                          const RefineSettings& rs, const SimSettings& sim);

}  // namespace featkit
