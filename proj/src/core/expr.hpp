#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace featkit {

// ============================================================================
// Affine expressions
// ============================================================================

/// constant + sum(coeff * name). Names resolve against automaton variables
/// first and parameters second at evaluation time. Terms are kept in
/// insertion order with unique names; exact-zero coefficients are dropped so
/// that structurally equal expressions print identically.
struct LinExpr {
    struct Term {
        std::string name;
        double coeff = 0.0;
        bool operator==(const Term&) const = default;
    };

    double constant = 0.0;
    std::vector<Term> terms;

    static LinExpr constant_of(double c) {
        LinExpr e;
        e.constant = c;
        return e;
    }

    static LinExpr variable(const std::string& name, double coeff = 1.0) {
        LinExpr e;
        e.add_term(name, coeff);
        return e;
    }

    void add_term(const std::string& name, double coeff);
    double coeff_of(std::string_view name) const;
    bool references(std::string_view name) const { return coeff_of(name) != 0.0; }
    bool is_constant() const { return terms.empty(); }
    bool is_single_variable() const {
        return terms.size() == 1 && terms[0].coeff == 1.0 && constant == 0.0;
    }

    LinExpr& operator+=(const LinExpr& o);
    LinExpr& operator-=(const LinExpr& o);
    void scale(double k);

    /// Replace `name` by a numeric value, folding it into the constant.
    void substitute(std::string_view name, double value);

    /// Replace `name` by an affine expression (used to compose guards and
    /// captures with transition resets).
    void substitute(std::string_view name, const LinExpr& replacement);

    /// Order-insensitive structural equality.
    bool operator==(const LinExpr& o) const;
};

// ============================================================================
// Predicates over real variables
// ============================================================================

enum class Rel { Le, Lt, Ge, Gt, Eq };

std::string_view rel_text(Rel r);

/// Atomic predicate: either `lhs REL rhs` over affine expressions, or a
/// location-label predicate `state == label` when `state_label` is set.
struct Porv {
    LinExpr lhs;
    Rel rel = Rel::Le;
    LinExpr rhs;
    std::string state_label;  // nonempty => predicate over the location label

    bool is_state() const { return !state_label.empty(); }

    static Porv state_eq(const std::string& label) {
        Porv p;
        p.rel = Rel::Eq;
        p.state_label = label;
        return p;
    }

    static Porv compare(LinExpr lhs, Rel rel, LinExpr rhs) {
        Porv p;
        p.lhs = std::move(lhs);
        p.rel = rel;
        p.rhs = std::move(rhs);
        return p;
    }

    bool operator==(const Porv&) const = default;
};

/// Conjunction of PORVs; empty means `true`.
struct Condition {
    std::vector<Porv> conjuncts;

    bool is_true() const { return conjuncts.empty(); }
    void add(Porv p) { conjuncts.push_back(std::move(p)); }
    void add_all(const Condition& c) {
        conjuncts.insert(conjuncts.end(), c.conjuncts.begin(), c.conjuncts.end());
    }

    bool operator==(const Condition&) const = default;
};

// ============================================================================
// Evaluation
// ============================================================================

/// Point state: a location plus one real value per variable.
struct Valuation {
    std::string mode;
    std::map<std::string, double> values;
    double time = 0.0;
};

using ParamMap = std::map<std::string, double>;

/// constant + sum(coeff * value); names resolve from v.values, then params.
/// Throws Error{Input} on an unresolved name.
double eval_lin(const LinExpr& e, const Valuation& v, const ParamMap& params);

bool eval_porv(const Porv& p, const Valuation& v, const ParamMap& params);

/// Conjunction of all PORV truth values; closed relations include the
/// equality boundary. `state`/`mode` predicates compare against v.mode.
bool eval_condition(const Condition& c, const Valuation& v, const ParamMap& params);

/// Relation check on already-evaluated sides.
bool rel_holds(double lhs, Rel rel, double rhs);

}  // namespace featkit
