#pragma once

#include <optional>
#include <string>
#include <vector>

#include "automaton.hpp"
#include "feature.hpp"

namespace featkit {

/// Feature compiled to an automaton skeleton: one watch location per stage
/// plus an accept location, one delay clock, and registers for the feature
/// locals plus the fresh feature-value variable. Edge k advances from watch
/// k when stage k matches; the edge into accept also latches the computed
/// feature value.
struct MonitorAutomaton {
    struct AdvanceEdge {
        int from_stage = 0;                  // q_k -> q_{k+1}
        std::optional<DelayWindow> window;   // none on the first edge
        Condition stage_guard;               // numeric and state predicates
        std::optional<Condition> event;      // rising-edge predicate
        std::vector<std::pair<std::string, CaptureExpr>> captures;
        bool into_accept = false;
    };

    std::string feature_name;
    int stage_count = 0;
    std::vector<std::string> locations;  // q0..q{n-1}, accept
    std::string clock_name;
    std::string time_name;               // empty when no $time capture
    std::vector<std::string> registers;  // locals then feat
    std::string feat_name;
    LinExpr compute;
    std::vector<AdvanceEdge> edges;
};

MonitorAutomaton compile_monitor(const BoundFeature& f);

/// The model automaton composed with a feature monitor. `automaton` is an
/// ordinary hybrid automaton (rising edges of numeric events are encoded
/// structurally: the negated predicate's closure joins the watch location's
/// invariant and the true side guards the advance edge); the side tables
/// give the engines the monitor structure back.
struct ProductModel {
    HybridAutomaton automaton;
    std::string feat_var;
    std::vector<std::string> accept_locations;
    std::string source_model;
    std::string source_feature;

    std::string clock_var;               // monitor delay clock ("" for plain wraps)
    std::string time_var;                // global clock ("" when unused)
    std::vector<std::string> model_vars;
    std::vector<std::string> monitor_vars;
    int stage_count = 0;

    struct LocInfo {
        std::string model_loc;  // source model location name
        int stage = -1;         // 0..stage_count-1 watch, stage_count = accept
    };
    std::vector<LocInfo> loc_info;  // parallel to automaton.locations

    enum class TransKind { Model, Advance, SyncAdvance };
    struct TransInfo {
        TransKind kind = TransKind::Model;
        int model_transition = -1;       // Model / SyncAdvance
        int edge = -1;                   // Advance / SyncAdvance
        std::optional<Porv> event_porv;  // numeric rising-edge predicate => urgent
    };
    std::vector<TransInfo> trans_info;  // parallel to automaton.transitions

    double feat_sentinel = 0.0;

    bool has_monitor() const { return stage_count > 0; }
    bool is_accept(int loc_index) const {
        return has_monitor() && loc_info[loc_index].stage == stage_count;
    }
};

/// Synchronized composition (the pre-state automaton must validate cleanly).
/// Monitor predicates may reference model variables, parameters (folded
/// here) and `state`; anything else is an error. Unreachable location pairs
/// are pruned.
ProductModel product(const HybridAutomaton& ha, const MonitorAutomaton& m);

/// Adapter so the engines can run a bare model with no feature attached.
ProductModel wrap_plain(const HybridAutomaton& ha);

}  // namespace featkit
