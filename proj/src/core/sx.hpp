#pragma once

#include <optional>
#include <string>
#include <vector>

#include "automaton.hpp"

namespace featkit {

// ============================================================================
// SX document model (syntactic view of a SpaceEx XML file)
// ============================================================================

struct SxParam {
    std::string name;
    bool is_const = false;  // dynamics="const"
    bool local = false;
};

struct SxLocation {
    std::string id;
    std::string name;
    std::string invariant_text;
    std::string flow_text;
};

struct SxTransition {
    std::string source;  // location ids
    std::string target;
    std::string guard_text;
    std::string assignment_text;
    std::string label;
};

struct SxBind {
    std::string component;
    std::string as;
    std::vector<std::pair<std::string, std::string>> maps;  // key -> value text
};

struct SxComponent {
    std::string id;
    std::vector<SxParam> params;
    std::vector<SxLocation> locations;
    std::vector<SxTransition> transitions;
    std::vector<SxBind> binds;

    const SxLocation* location_by_id(const std::string& id) const;
};

struct SxDocument {
    std::vector<SxComponent> components;

    const SxComponent* find(const std::string& id) const;
};

/// SpaceEx-style configuration (key = "value" lines).
struct SxConfig {
    std::string system;
    std::string initially;
    std::optional<double> time_horizon;
};

/// Parses the XML into components with their raw location/transition texts.
/// Flow expressions are affinity-checked per component (nonlinear flows are
/// rejected here); numeric lowering happens in flatten once binds fix the
/// constants.
SxDocument parse_sx(const std::string& xml);

SxConfig parse_sx_config(const std::string& text);

/// One level of network flattening: resolves cfg.system (a bind of a base
/// component, or a plain component), substitutes bind maps (numbers become
/// parameters, identifiers rename), and lowers the texts into a validated
/// automaton. Without a config the single component and its first location
/// are taken, with an unconstrained initial condition.
HybridAutomaton flatten(const SxDocument& doc, const SxConfig& cfg);

}  // namespace featkit
