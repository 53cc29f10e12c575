#pragma once

#include <map>
#include <optional>
#include <vector>

#include "compiled.hpp"
#include "linalg.hpp"
#include "monitor.hpp"
#include "trace.hpp"

namespace featkit {

struct SimSettings {
    double step = 1e-3;      // seconds, > 0
    double horizon = 10.0;   // seconds, > 0
    int max_jumps = 8;

    void check() const;
};

/// Per-stage sampling knobs for exploring the monitor's nondeterminism:
/// `delay` postpones a guard-only advance past stage entry, `skip_events`
/// lets that many qualifying state-event advances pass untaken.
struct StagePolicy {
    double delay = 0.0;
    int skip_events = 0;
};

struct SimPolicy {
    std::vector<StagePolicy> stages;

    StagePolicy for_stage(int k) const {
        if (k >= 0 && static_cast<size_t>(k) < stages.size()) return stages[k];
        return {};
    }
};

enum class StopReason { Horizon, JumpBudget, Deadlock };

struct SimResult {
    Trace trace;
    StopReason reason = StopReason::Horizon;
    bool accepted = false;
    double feat_value = 0.0;
    double accept_time = 0.0;
    int jumps = 0;
    long steps_taken = 0;
};

// ============================================================================
// Compiled model (shared by the simulator and the flowpipe)
// ============================================================================

struct CompiledLoc {
    Mat A;
    std::vector<double> b;
    CompiledCond invariant;
    bool urgent = false;
    std::vector<int> out;  // outgoing transition indices
};

struct CompiledTrans {
    int source = -1;
    int target = -1;
    CompiledCond guard;
    std::vector<std::pair<int, CompiledLin>> resets;  // simultaneous, on the pre-state
    ProductModel::TransInfo info;

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y = x;
        for (const auto& [idx, row] : resets) y[idx] = row.eval(x);
        return y;
    }
};

/// The product lowered against its variable layout: flow matrices, compiled
/// conditions, reset rows. Built once, shared read-only.
struct CompiledModel {
    const ProductModel* pm = nullptr;
    std::vector<std::string> vars;
    std::vector<CompiledLoc> locs;
    std::vector<CompiledTrans> trans;
    CompiledCond initial;
    int initial_loc = -1;
    int feat_idx = -1;
    int clock_idx = -1;
    int time_idx = -1;

    int loc_index(const std::string& name) const;
    int stage_of(int loc) const { return pm->loc_info[loc].stage; }
};

/// The model must outlive the compiled view (it is referenced, not copied).
CompiledModel compile_model(const ProductModel& pm);
CompiledModel compile_model(ProductModel&&) = delete;

/// Exact flow evaluation x(h) for the affine dynamics of one location.
std::vector<double> flow_at(const CompiledLoc& loc, const std::vector<double>& x, double h);

// ============================================================================
// Runs
// ============================================================================

/// Fixed-step run of the product from `start` (monitor registers default to
/// their initial values when absent). Guard crossings and invariant exits
/// are located by bisection on the analytic flow to step*1e-6; urgent
/// locations exit with zero dwell; the trace ends at the horizon, when the
/// jump budget is exhausted, or at a deadlock (invariant boundary with no
/// enabled transition).
SimResult simulate(const ProductModel& pm, const Valuation& start, const SimSettings& s,
                   const SimPolicy& policy = {});

SimResult simulate(const CompiledModel& cm, const Valuation& start, const SimSettings& s,
                   const SimPolicy& policy = {});

/// Erases the monitor: model location names, model variables only. Step
/// boundaries are preserved.
Trace project_to_model(const ProductModel& pm, const Trace& product_trace);

/// Initial region as a box over the product variables; fails when any
/// dimension is unbounded.
IBox initial_box(const CompiledModel& cm);

/// A valuation at the centre of the initial box.
Valuation initial_midpoint(const CompiledModel& cm);

}  // namespace featkit
