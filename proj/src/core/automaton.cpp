#include "automaton.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace featkit {

namespace {

bool name_known(const HybridAutomaton& ha, const std::string& n) {
    return ha.has_variable(n) || ha.parameters.contains(n);
}

void check_expr(const HybridAutomaton& ha, const LinExpr& e, const std::string& element,
                std::vector<Diagnostic>& out) {
    if (!std::isfinite(e.constant))
        out.push_back({element, "non-finite constant"});
    for (const auto& t : e.terms) {
        if (!std::isfinite(t.coeff))
            out.push_back({element, "non-finite coefficient on '" + t.name + "'"});
        if (!name_known(ha, t.name))
            out.push_back({element, "undeclared name '" + t.name + "'"});
    }
}

bool porv_mentions_variable(const HybridAutomaton& ha, const Porv& p) {
    for (const auto& t : p.lhs.terms)
        if (ha.has_variable(t.name)) return true;
    for (const auto& t : p.rhs.terms)
        if (ha.has_variable(t.name)) return true;
    return false;
}

void check_condition(const HybridAutomaton& ha, const Condition& c, const std::string& element,
                     bool allow_state, std::vector<Diagnostic>& out) {
    for (const auto& p : c.conjuncts) {
        if (p.is_state()) {
            if (!allow_state)
                out.push_back({element, "state predicate not allowed here"});
            else if (ha.location_index(p.state_label) < 0)
                out.push_back({element, "state predicate names unknown location '" +
                                             p.state_label + "'"});
            continue;
        }
        check_expr(ha, p.lhs, element, out);
        check_expr(ha, p.rhs, element, out);
        if (!porv_mentions_variable(ha, p))
            out.push_back({element, "predicate references no variable"});
    }
}

}  // namespace

std::vector<Diagnostic> validate(const HybridAutomaton& ha) {
    std::vector<Diagnostic> out;

    // Unique names, disjoint variable/parameter namespaces.
    std::set<std::string> vars;
    for (const auto& v : ha.variables) {
        if (!vars.insert(v).second)
            out.push_back({"variable " + v, "duplicate variable"});
        if (ha.parameters.contains(v))
            out.push_back({"variable " + v, "name also declared as parameter"});
    }

    std::set<std::string> locs;
    for (const auto& l : ha.locations) {
        if (!locs.insert(l.name).second)
            out.push_back({"location " + l.name, "duplicate location"});
    }

    // Per-location flow coverage and condition sanity.
    for (const auto& l : ha.locations) {
        const std::string el = "location " + l.name;
        for (const auto& v : ha.variables) {
            if (!l.flow.contains(v))
                out.push_back({el, "incomplete flow: no ODE for '" + v + "'"});
        }
        for (const auto& [fv, rhs] : l.flow) {
            if (!ha.has_variable(fv))
                out.push_back({el, "flow for undeclared variable '" + fv + "'"});
            check_expr(ha, rhs, el + " flow of " + fv, out);
        }
        check_condition(ha, l.invariant, el + " invariant", true, out);
    }

    // Transitions: endpoints declared, guards/resets well formed.
    for (size_t i = 0; i < ha.transitions.size(); ++i) {
        const auto& t = ha.transitions[i];
        std::ostringstream el;
        el << "transition " << t.source << "->" << t.target << " [" << i << "]";
        if (ha.location_index(t.source) < 0)
            out.push_back({el.str(), "undeclared source location"});
        if (ha.location_index(t.target) < 0)
            out.push_back({el.str(), "undeclared target location"});
        check_condition(ha, t.guard, el.str() + " guard", true, out);
        for (const auto& [rv, rhs] : t.reset) {
            if (!ha.has_variable(rv))
                out.push_back({el.str(), "reset of undeclared variable '" + rv + "'"});
            check_expr(ha, rhs, el.str() + " reset of " + rv, out);
        }
    }

    // Initial state.
    if (ha.initial_location.empty()) {
        out.push_back({"initial", "no initial location"});
    } else if (ha.location_index(ha.initial_location) < 0) {
        out.push_back({"initial", "undeclared initial location '" + ha.initial_location + "'"});
    }
    for (const auto& p : ha.initial.conjuncts) {
        if (p.is_state()) {
            out.push_back({"initial", "state predicate in initial condition"});
            continue;
        }
        check_expr(ha, p.lhs, "initial condition", out);
        check_expr(ha, p.rhs, "initial condition", out);
    }

    for (const auto& [pn, pv] : ha.parameters) {
        if (!std::isfinite(pv))
            out.push_back({"parameter " + pn, "non-finite value"});
    }

    return out;
}

std::string join_diagnostics(const std::vector<Diagnostic>& diags) {
    std::ostringstream os;
    for (size_t i = 0; i < diags.size(); ++i) {
        if (i) os << "; ";
        os << diags[i].element << ": " << diags[i].message;
    }
    return os.str();
}

}  // namespace featkit
