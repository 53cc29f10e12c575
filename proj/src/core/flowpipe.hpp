#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sim.hpp"

namespace featkit {

/// Box reach sets: per (location, time-step index) the hull of every state
/// the product can occupy during that step's window, plus the jump events
/// discovered. Step index k covers wall-clock [k*step, (k+1)*step].
struct ReachSets {
    double step = 0.0;
    double horizon = 0.0;
    int steps = 0;  // boxes indexed 0..steps
    int max_jumps = 0;
    std::vector<std::string> vars;
    std::vector<std::string> locations;
    std::vector<std::vector<std::optional<IBox>>> hulls;  // [loc][step]

    struct JumpEvent {
        int step;
        int transition;
    };
    std::vector<JumpEvent> jumps;

    long boxes_processed = 0;
    int rounds = 0;

    const std::optional<IBox>& box_at(int loc, int k) const { return hulls[loc][k]; }
};

/// Interval of feature values over all matching runs; empty when the monitor
/// never accepts.
struct FeatureRange {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = true;

    double width() const { return empty ? 0.0 : hi - lo; }
    bool contains(double v, double tol = 0.0) const {
        return !empty && v >= lo - tol && v <= hi + tol;
    }
};

/// Bounded-time over-approximation: every run from any initial point stays
/// inside the recorded boxes (per-step bloat covers in-step curvature).
/// Fails on an unbounded initial set or when guard processing blows past its
/// work budget.
ReachSets flowpipe(const CompiledModel& cm, const SimSettings& s);
ReachSets flowpipe(const ProductModel& pm, const SimSettings& s);

/// Hull of the feature variable over every accept-location box.
FeatureRange feature_range_of(const ReachSets& rs, const CompiledModel& cm);

/// Steps 3-4 in one call: flowpipe, then the accept hull of `feat`.
FeatureRange initial_feature_range(const ProductModel& pm, const SimSettings& s);

/// One row per location/step/variable interval.
std::string write_reach_csv(const ReachSets& rs);

}  // namespace featkit
