#include "compiled.hpp"

#include <algorithm>

#include "diag.hpp"

namespace featkit {

namespace {

void lower_side(const LinExpr& e, double sign, const std::vector<std::string>& vars,
                const ParamMap& params, CompiledPorv& out) {
    out.c += sign * e.constant;
    for (const auto& t : e.terms) {
        auto it = std::find(vars.begin(), vars.end(), t.name);
        if (it != vars.end()) {
            int idx = static_cast<int>(it - vars.begin());
            bool merged = false;
            for (auto& term : out.terms) {
                if (term.idx == idx) {
                    term.k += sign * t.coeff;
                    merged = true;
                    break;
                }
            }
            if (!merged) out.terms.push_back({idx, sign * t.coeff});
            continue;
        }
        auto pit = params.find(t.name);
        if (pit == params.end())
            fail_input("unresolved name '" + t.name + "' in condition");
        out.c += sign * t.coeff * pit->second;
    }
}

}  // namespace

double CompiledCond::min_slack(const std::vector<double>& x) const {
    if (infeasible) return -1.0;
    double best = 1e300;
    for (const auto& p : porvs) {
        double v = p.value(x);
        double s;
        switch (p.rel) {
            case Rel::Le:
            case Rel::Lt: s = -v; break;
            case Rel::Ge:
            case Rel::Gt: s = v; break;
            case Rel::Eq: s = -std::abs(v); break;
            default: s = 0; break;
        }
        best = std::min(best, s);
    }
    return best;
}

CompiledCond compile_condition(const Condition& c, const std::vector<std::string>& vars,
                               const ParamMap& params, const std::string& at_location) {
    CompiledCond out;
    for (const auto& p : c.conjuncts) {
        if (p.is_state()) {
            if (at_location.empty())
                fail_input("state predicate not supported in this context");
            if (p.state_label != at_location) {
                out.infeasible = true;
                out.porvs.clear();
                return out;
            }
            continue;  // trivially true here
        }
        CompiledPorv cp;
        cp.rel = p.rel;
        lower_side(p.lhs, 1.0, vars, params, cp);
        lower_side(p.rhs, -1.0, vars, params, cp);
        // Drop exact-zero coefficients left by cancellation.
        std::erase_if(cp.terms, [](const CompiledPorv::Term& t) { return t.k == 0.0; });
        out.porvs.push_back(std::move(cp));
    }
    return out;
}

bool tighten_box(IBox& box, const CompiledCond& c) {
    if (c.infeasible) return false;
    for (int pass = 0; pass < 3; ++pass) {
        for (const auto& p : c.porvs) {
            Interval v = p.value(box);
            bool need_upper = p.rel == Rel::Le || p.rel == Rel::Lt || p.rel == Rel::Eq;
            bool need_lower = p.rel == Rel::Ge || p.rel == Rel::Gt || p.rel == Rel::Eq;
            if (need_upper && v.lo > 0.0) return false;
            if (need_lower && v.hi < 0.0) return false;
            for (const auto& t : p.terms) {
                // Contribution of everything except this term, computed
                // directly (interval subtraction would decorrelate).
                Interval rest = Interval::point(p.c);
                for (const auto& o : p.terms) {
                    if (o.idx == t.idx) continue;
                    rest = rest + scale(box[o.idx], o.k);
                }
                // need_upper: k*x <= -rest.lo ; need_lower: k*x >= -rest.hi
                if (need_upper) {
                    double bound = -rest.lo;
                    if (t.k > 0)
                        box[t.idx].hi = std::min(box[t.idx].hi, bound / t.k);
                    else
                        box[t.idx].lo = std::max(box[t.idx].lo, bound / t.k);
                }
                if (need_lower) {
                    double bound = -rest.hi;
                    if (t.k > 0)
                        box[t.idx].lo = std::max(box[t.idx].lo, bound / t.k);
                    else
                        box[t.idx].hi = std::min(box[t.idx].hi, bound / t.k);
                }
                if (box[t.idx].lo > box[t.idx].hi) return false;
                v = p.value(box);
            }
        }
    }
    return true;
}

}  // namespace featkit
