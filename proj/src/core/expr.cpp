#include "expr.hpp"

#include <algorithm>

#include "diag.hpp"

namespace featkit {

void LinExpr::add_term(const std::string& name, double coeff) {
    for (size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].name == name) {
            terms[i].coeff += coeff;
            if (terms[i].coeff == 0.0) terms.erase(terms.begin() + i);
            return;
        }
    }
    if (coeff != 0.0) terms.push_back({name, coeff});
}

double LinExpr::coeff_of(std::string_view name) const {
    for (const auto& t : terms)
        if (t.name == name) return t.coeff;
    return 0.0;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
    constant += o.constant;
    for (const auto& t : o.terms) add_term(t.name, t.coeff);
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
    constant -= o.constant;
    for (const auto& t : o.terms) add_term(t.name, -t.coeff);
    return *this;
}

void LinExpr::scale(double k) {
    constant *= k;
    if (k == 0.0) {
        terms.clear();
        return;
    }
    for (auto& t : terms) t.coeff *= k;
}

void LinExpr::substitute(std::string_view name, double value) {
    for (size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].name == name) {
            constant += terms[i].coeff * value;
            terms.erase(terms.begin() + i);
            return;
        }
    }
}

void LinExpr::substitute(std::string_view name, const LinExpr& replacement) {
    for (size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].name == name) {
            double k = terms[i].coeff;
            terms.erase(terms.begin() + i);
            constant += k * replacement.constant;
            for (const auto& t : replacement.terms) add_term(t.name, k * t.coeff);
            return;
        }
    }
}

bool LinExpr::operator==(const LinExpr& o) const {
    if (constant != o.constant || terms.size() != o.terms.size()) return false;
    for (const auto& t : terms)
        if (o.coeff_of(t.name) != t.coeff) return false;
    return true;
}

std::string_view rel_text(Rel r) {
    switch (r) {
        case Rel::Le: return "<=";
        case Rel::Lt: return "<";
        case Rel::Ge: return ">=";
        case Rel::Gt: return ">";
        case Rel::Eq: return "==";
    }
    return "<=";
}

bool rel_holds(double lhs, Rel rel, double rhs) {
    switch (rel) {
        case Rel::Le: return lhs <= rhs;
        case Rel::Lt: return lhs < rhs;
        case Rel::Ge: return lhs >= rhs;
        case Rel::Gt: return lhs > rhs;
        case Rel::Eq: return lhs == rhs;
    }
    return false;
}

double eval_lin(const LinExpr& e, const Valuation& v, const ParamMap& params) {
    double acc = e.constant;
    for (const auto& t : e.terms) {
        auto it = v.values.find(t.name);
        if (it != v.values.end()) {
            acc += t.coeff * it->second;
            continue;
        }
        auto pit = params.find(t.name);
        if (pit == params.end())
            fail_input("unresolved name '" + t.name + "' in expression");
        acc += t.coeff * pit->second;
    }
    return acc;
}

bool eval_porv(const Porv& p, const Valuation& v, const ParamMap& params) {
    if (p.is_state()) return v.mode == p.state_label;
    return rel_holds(eval_lin(p.lhs, v, params), p.rel, eval_lin(p.rhs, v, params));
}

bool eval_condition(const Condition& c, const Valuation& v, const ParamMap& params) {
    for (const auto& p : c.conjuncts)
        if (!eval_porv(p, v, params)) return false;
    return true;
}

}  // namespace featkit
