#pragma once

#include <optional>
#include <string>
#include <vector>

#include "expr.hpp"

namespace featkit {

/// Dense-time separation between consecutive stages; an absent upper bound
/// (written `$`) means "anytime after lower".
struct DelayWindow {
    double lower = 0.0;
    std::optional<double> upper;  // nullopt = open

    bool operator==(const DelayWindow&) const = default;
};

/// `@+(P)`: true exactly on the positive edge of P. Only rising edges exist
/// in the language.
struct EventEdge {
    Condition predicate;

    bool operator==(const EventEdge&) const = default;
};

struct CaptureExpr {
    enum class Kind { NowTime, Linear };

    Kind kind = Kind::NowTime;
    LinExpr expr;  // meaningful for Linear; a bare variable is a special case

    bool is_variable() const { return kind == Kind::Linear && expr.is_single_variable(); }

    bool operator==(const CaptureExpr&) const = default;
};

/// One element of the delay-separated sequence: a guard to hold at the match
/// instant, an optional rising-edge event, captures to latch, and the window
/// to the next stage (absent only on the last stage).
struct Stage {
    Condition guard;  // over model variables, `state`, and formals
    std::vector<EventEdge> events;
    std::vector<std::pair<std::string, CaptureExpr>> captures;
    std::optional<DelayWindow> delay_to_next;

    bool has_event() const { return !events.empty(); }

    bool operator==(const Stage&) const = default;
};

struct FeatureSpec {
    std::string name;
    std::vector<std::string> formals;
    std::vector<std::string> locals;
    std::vector<Stage> stages;
    LinExpr compute;  // over locals and formals

    bool operator==(const FeatureSpec&) const = default;
};

/// A feature with every formal pinned to a number. Stages and compute are
/// stored with the formals substituted away, so downstream consumers see
/// plain numeric thresholds.
struct BoundFeature {
    FeatureSpec spec;
    ParamMap bindings;
    std::vector<Stage> stages;  // formals folded
    LinExpr compute;            // formals folded

    bool operator==(const BoundFeature&) const = default;
};

/// Parses the feature language:
///
///   feature NAME "(" [formal ("," formal)*] ")" ";"
///   "begin"
///     ("var" name ("," name)* ";")*
///     stage ("##[" num ":" (num | "$") "]" stage)*
///     "|->" NAME "=" expr ";"
///   "end"
///
///   stage := atom ("&&" atom)* ["," capture ("," capture)*]
///   atom  := "@+" "(" porv ("&&" porv)* ")" | porv
///   capture := local "=" ("$time" | expr)
///
/// The assignment target after `|->` must be the feature name. Falling edges
/// (`@-`) are rejected. An event predicate is either a conjunction of
/// `state==...` atoms or a single numeric predicate.
FeatureSpec parse_feature(const std::string& text);

/// Substitutes numeric values for all formals. `values` must bind every
/// formal exactly once and nothing else.
BoundFeature bind_feature_params(const FeatureSpec& spec, const ParamMap& values);

/// Canonical text emission; parse_feature(print_feature(f)) == f.
std::string print_feature(const FeatureSpec& f);

}  // namespace featkit
