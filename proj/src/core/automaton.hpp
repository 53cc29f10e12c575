#pragma once

#include <optional>
#include <string>
#include <vector>

#include "diag.hpp"
#include "expr.hpp"

namespace featkit {

/// Small insertion-ordered string->T association used for flows, resets and
/// parameters, where both lookup and a stable print order matter.
template <typename T>
struct NamedSeq {
    std::vector<std::pair<std::string, T>> items;

    const T* find(std::string_view name) const {
        for (const auto& [n, v] : items)
            if (n == name) return &v;
        return nullptr;
    }

    T* find(std::string_view name) {
        for (auto& [n, v] : items)
            if (n == name) return &v;
        return nullptr;
    }

    bool contains(std::string_view name) const { return find(name) != nullptr; }

    /// Inserts or overwrites.
    void set(const std::string& name, T value) {
        if (T* p = find(name)) {
            *p = std::move(value);
            return;
        }
        items.emplace_back(name, std::move(value));
    }

    size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
    auto begin() const { return items.begin(); }
    auto end() const { return items.end(); }

    /// Order-insensitive equality.
    bool operator==(const NamedSeq& o) const {
        if (items.size() != o.items.size()) return false;
        for (const auto& [n, v] : items) {
            const T* p = o.find(n);
            if (!p || !(*p == v)) return false;
        }
        return true;
    }
};

// ============================================================================
// Hybrid automaton model
// ============================================================================

struct Location {
    std::string name;
    NamedSeq<LinExpr> flow;  // one ODE right-hand side per continuous variable
    Condition invariant;
    bool urgent = false;  // must be exited without time elapse

    bool operator==(const Location&) const = default;
};

struct Transition {
    std::string source;
    std::string target;
    Condition guard;
    NamedSeq<LinExpr> reset;  // primed semantics; absent entries are identity

    bool operator==(const Transition&) const = default;
};

struct HybridAutomaton {
    std::string name;
    std::vector<std::string> variables;  // declaration order fixes dimensions
    NamedSeq<double> parameters;
    std::vector<Location> locations;
    std::vector<Transition> transitions;
    std::string initial_location;
    Condition initial;

    const Location* location(std::string_view name) const {
        for (const auto& l : locations)
            if (l.name == name) return &l;
        return nullptr;
    }

    int location_index(std::string_view name) const {
        for (size_t i = 0; i < locations.size(); ++i)
            if (locations[i].name == name) return static_cast<int>(i);
        return -1;
    }

    bool has_variable(std::string_view name) const {
        for (const auto& v : variables)
            if (v == name) return true;
        return false;
    }

    ParamMap param_map() const {
        ParamMap m;
        for (const auto& [n, v] : parameters) m[n] = v;
        return m;
    }

    bool operator==(const HybridAutomaton&) const = default;
};

/// Checks every structural invariant of the model; returns one diagnostic per
/// violation (empty means well-formed). Pure: same input, same output.
std::vector<Diagnostic> validate(const HybridAutomaton& ha);

}  // namespace featkit
