#pragma once

#include <string>
#include <vector>

#include "expr.hpp"
#include "linalg.hpp"

namespace featkit {

/// Affine row lowered against a fixed variable layout.
struct CompiledLin {
    struct Term {
        int idx;
        double k;
    };
    std::vector<Term> terms;
    double c = 0.0;

    double eval(const std::vector<double>& x) const {
        double s = c;
        for (const auto& t : terms) s += t.k * x[t.idx];
        return s;
    }

    Interval eval(const IBox& box) const {
        Interval acc = Interval::point(c);
        for (const auto& t : terms) acc = acc + scale(box[t.idx], t.k);
        return acc;
    }
};

/// Numeric predicate lowered to `c + sum(k_i * x[idx_i])  REL  0` against a
/// fixed variable layout. State predicates are resolved when compiling for a
/// known location (see compile_condition); a condition whose state predicate
/// fails there is marked infeasible outright.
struct CompiledPorv {
    struct Term {
        int idx;
        double k;
    };
    std::vector<Term> terms;
    double c = 0.0;
    Rel rel = Rel::Le;

    double value(const std::vector<double>& x) const {
        double s = c;
        for (const auto& t : terms) s += t.k * x[t.idx];
        return s;
    }

    Interval value(const IBox& box) const {
        Interval acc = Interval::point(c);
        for (const auto& t : terms) acc = acc + scale(box[t.idx], t.k);
        return acc;
    }

    /// Magnitude scale used for relative tolerances.
    double scale_at(const std::vector<double>& x) const {
        double s = std::abs(c);
        for (const auto& t : terms) s += std::abs(t.k * x[t.idx]);
        return 1.0 + s;
    }

    bool sat(double v, double tol) const {
        switch (rel) {
            case Rel::Le: return v <= tol;
            case Rel::Lt: return v < tol;
            case Rel::Ge: return v >= -tol;
            case Rel::Gt: return v > -tol;
            case Rel::Eq: return std::abs(v) <= tol;
        }
        return false;
    }

    bool sat_at(const std::vector<double>& x, double rel_tol) const {
        return sat(value(x), rel_tol * scale_at(x));
    }
};

struct CompiledCond {
    bool infeasible = false;  // a state predicate ruled this location out
    std::vector<CompiledPorv> porvs;

    bool sat_at(const std::vector<double>& x, double rel_tol) const {
        if (infeasible) return false;
        for (const auto& p : porvs)
            if (!p.sat_at(x, rel_tol)) return false;
        return true;
    }

    /// Smallest satisfaction margin; positive means strictly inside.
    double min_slack(const std::vector<double>& x) const;
};

/// Lowers a condition against a variable layout; parameter references fold
/// to numbers, unknown names fail. When `at_location` is nonempty, state
/// predicates are resolved against it; otherwise they are rejected.
CompiledCond compile_condition(const Condition& c, const std::vector<std::string>& vars,
                               const ParamMap& params, const std::string& at_location);

/// Interval constraint propagation: narrows `box` to (an over-approximation
/// of) its subset satisfying the condition. Returns false when the result is
/// certainly empty. Strict relations are treated as closed.
bool tighten_box(IBox& box, const CompiledCond& c);

}  // namespace featkit
