#include "trace_eval.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "compiled.hpp"
#include "diag.hpp"

namespace featkit {

namespace {

constexpr double kTol = 1e-9;

/// A condition split for trace replay: the state labels (all must equal the
/// current mode) and the numeric part compiled against the trace layout.
struct TCond {
    std::vector<std::string> labels;
    CompiledCond numeric;
};

TCond compile_tcond(const Condition& c, const Trace& tr) {
    TCond out;
    Condition numeric_only;
    for (const auto& p : c.conjuncts) {
        if (p.is_state())
            out.labels.push_back(p.state_label);
        else
            numeric_only.add(p);
    }
    ParamMap no_params;
    out.numeric = compile_condition(numeric_only, tr.vars, no_params, "");
    return out;
}

bool labels_ok(const TCond& c, const std::string& mode) {
    for (const auto& l : c.labels)
        if (l != mode) return false;
    return true;
}

/// A point on the trace: inside step `step` at time `t`, with interpolated
/// values when `t` falls between samples.
struct Point {
    int step = 0;
    int sample = 0;  // index of the sample at or before t
    double t = 0.0;
    std::vector<double> values;
};

struct Replayer {
    const Trace& tr;
    const BoundFeature& f;
    size_t cap;

    std::vector<TCond> guards;
    std::vector<std::optional<TCond>> events;
    std::vector<std::vector<std::pair<std::string, CompiledLin>>> captures;  // per stage
    CompiledLin compute;
    std::vector<int> compute_local;  // term index -> local slot, -1 for trace vars

    FeatureEval out;
    long budget = 4000000;

    Replayer(const Trace& trace, const BoundFeature& feat, size_t max_matches)
        : tr(trace), f(feat), cap(max_matches) {}

    static CompiledLin compile_lin_for(const LinExpr& e, const std::vector<std::string>& vars,
                                       const std::vector<std::string>& extra) {
        CompiledLin out;
        out.c = e.constant;
        for (const auto& t : e.terms) {
            // Feature locals shadow trace variables: product traces carry the
            // monitor registers under the same names.
            auto xt = std::find(extra.begin(), extra.end(), t.name);
            if (xt != extra.end()) {
                // Extra slots live past the trace variables.
                out.terms.push_back(
                    {static_cast<int>(vars.size() + (xt - extra.begin())), t.coeff});
                continue;
            }
            auto it = std::find(vars.begin(), vars.end(), t.name);
            if (it != vars.end()) {
                out.terms.push_back({static_cast<int>(it - vars.begin()), t.coeff});
                continue;
            }
            fail_input("trace is missing variable '" + t.name + "'");
        }
        return out;
    }

    void prepare() {
        std::vector<std::string> none;
        for (const auto& st : f.stages) {
            guards.push_back(compile_tcond(st.guard, tr));
            if (!st.events.empty())
                events.push_back(compile_tcond(st.events.front().predicate, tr));
            else
                events.push_back(std::nullopt);
            std::vector<std::pair<std::string, CompiledLin>> caps;
            for (const auto& [local, cap_expr] : st.captures) {
                if (cap_expr.kind == CaptureExpr::Kind::NowTime) {
                    caps.emplace_back(local, CompiledLin{});  // marker; handled specially
                    caps.back().second.c = std::nan("");
                } else {
                    caps.emplace_back(local, compile_lin_for(cap_expr.expr, tr.vars, none));
                }
            }
            captures.push_back(std::move(caps));
        }
        compute = compile_lin_for(f.compute, tr.vars, f.spec.locals);
    }

    bool guard_ok(int stage, const Point& p) const {
        const std::string& mode = tr.steps[p.step].mode;
        return labels_ok(guards[stage], mode) && guards[stage].numeric.sat_at(p.values, kTol);
    }

    Point at_sample(int step, int sample) const {
        const TraceSample& s = tr.steps[step].samples[sample];
        return {step, sample, s.t, s.values};
    }

    /// Next position strictly after p, stepping sample by sample (skipping
    /// null steps). Returns false at the end of the trace.
    bool next_position(Point& p) const {
        int step = p.step, sample = p.sample + 1;
        while (step < static_cast<int>(tr.steps.size())) {
            const auto& st = tr.steps[step];
            if (!st.is_null && sample < static_cast<int>(st.samples.size())) {
                Point np = at_sample(step, sample);
                p = np;
                return true;
            }
            ++step;
            sample = 0;
        }
        return false;
    }

    static std::vector<double> interp(const TraceSample& a, const TraceSample& b, double t) {
        double span = b.t - a.t;
        double w = span <= 0 ? 0.0 : (t - a.t) / span;
        std::vector<double> v(a.values.size());
        for (size_t i = 0; i < v.size(); ++i)
            v[i] = a.values[i] + w * (b.values[i] - a.values[i]);
        return v;
    }

    double capture_value(const CompiledLin& lin, const Point& p) const {
        if (std::isnan(lin.c)) return p.t;  // $time
        return lin.eval(p.values);
    }

    void complete_match(const std::vector<double>& locals) {
        std::vector<double> env(tr.vars.size() + f.spec.locals.size(), 0.0);
        // Trace-var slots stay zero: compute may only reference locals and
        // folded formals by construction.
        for (size_t i = 0; i < locals.size(); ++i) env[tr.vars.size() + i] = locals[i];
        out.values.push_back(compute.eval(env));
    }

    int local_slot(const std::string& name) const {
        auto it = std::find(f.spec.locals.begin(), f.spec.locals.end(), name);
        return static_cast<int>(it - f.spec.locals.begin());
    }

    void take(int stage, const Point& p, std::vector<double> locals) {
        for (const auto& [local, lin] : captures[stage])
            locals[local_slot(local)] = capture_value(lin, p);
        if (stage + 1 == static_cast<int>(f.stages.size())) {
            complete_match(locals);
            return;
        }
        advance(stage + 1, p, std::move(locals));
    }

    bool done() const {
        return out.truncated || out.values.size() >= cap;
    }

    bool spend() {
        if (--budget < 0 || out.values.size() >= cap) {
            out.truncated = true;
            return false;
        }
        return true;
    }

    /// Explores every legal advance of `stage` from anchor `from`.
    void advance(int stage, const Point& from, std::vector<double> locals) {
        double lo = 0.0, hi = std::numeric_limits<double>::infinity();
        if (stage > 0) {
            const auto& w = f.stages[stage - 1].delay_to_next;
            lo = from.t + w->lower;
            if (w->upper) hi = from.t + *w->upper;
        }
        double wtol = kTol * (1.0 + std::abs(hi == std::numeric_limits<double>::infinity()
                                                 ? lo
                                                 : hi));

        if (events[stage]) {
            if (!events[stage]->labels.empty())
                advance_on_entry(stage, from, lo, hi, wtol, std::move(locals));
            else
                advance_on_rise(stage, from, lo, hi, wtol, std::move(locals));
            return;
        }

        // Guard-only: every qualifying sample inside the window.
        Point p = from;
        bool first = true;
        while (true) {
            if (!first && !next_position(p)) break;
            first = false;
            if (p.t > hi + wtol) break;
            if (p.t < lo - wtol) continue;
            if (!spend()) return;
            if (!guard_ok(stage, p)) continue;
            take(stage, p, locals);
            if (done()) return;
        }
    }

    /// Location-entry events: every step boundary that enters the labelled
    /// mode from a different one.
    void advance_on_entry(int stage, const Point& from, double lo, double hi, double wtol,
                          std::vector<double> locals) {
        const TCond& ev = *events[stage];
        std::string prev_mode = tr.steps[from.step].mode;
        for (int si = from.step + 1; si < static_cast<int>(tr.steps.size()); ++si) {
            const TraceStep& st = tr.steps[si];
            if (st.is_null) continue;
            std::string entered = st.mode;
            std::string before = prev_mode;
            prev_mode = entered;
            if (st.samples.empty()) continue;
            Point p = at_sample(si, 0);
            if (p.t > hi + wtol) break;
            if (entered == before) continue;
            if (!labels_ok(ev, entered)) continue;
            if (labels_ok(ev, before)) continue;  // was already inside
            if (p.t < lo - wtol) continue;
            if (!spend()) return;
            if (!guard_ok(stage, p)) continue;
            take(stage, p, locals);
            if (done()) return;
        }
    }

    /// Numeric rising edge: the first rise after the anchor decides the
    /// attempt. The predicate must be on its false side at the anchor
    /// (boundary counts as false side); if it is already strictly true the
    /// attempt dies, matching the watch-location encoding.
    void advance_on_rise(int stage, const Point& from, double lo, double hi, double wtol,
                         std::vector<double> locals) {
        const CompiledCond& p = events[stage]->numeric;
        if (p.porvs.empty()) return;

        const CompiledPorv& porv = p.porvs.front();
        double v0 = porv.value(from.values);
        double tol0 = kTol * porv.scale_at(from.values);
        if (porv.sat(v0, tol0)) {
            if (std::abs(v0) > tol0) return;  // strictly inside: the watch cannot arm
            // Exactly on the boundary: a zero-delay chain may fire now.
            if (from.t >= lo - wtol && from.t <= hi + wtol && spend() &&
                guard_ok(stage, from))
                take(stage, from, std::move(locals));
            return;
        }

        Point prev = from;
        Point cur = from;
        while (next_position(cur)) {
            if (!spend()) return;
            if (cur.t > hi + wtol && !p.sat_at(cur.values, kTol)) return;  // window expired
            if (p.sat_at(cur.values, kTol)) {
                Point hit = cur;
                if (cur.step == prev.step && cur.t > prev.t) {
                    // Refine the crossing instant inside the sample bracket.
                    const TraceSample a{prev.t, prev.values};
                    const TraceSample b{cur.t, cur.values};
                    double t_lo = prev.t, t_hi = cur.t;
                    for (int it = 0; it < 40 && t_hi - t_lo > 1e-12 * (1 + t_hi); ++it) {
                        double mid = 0.5 * (t_lo + t_hi);
                        std::vector<double> v = interp(a, b, mid);
                        if (p.sat_at(v, kTol))
                            t_hi = mid;
                        else
                            t_lo = mid;
                    }
                    hit.t = t_hi;
                    hit.values = interp(a, b, t_hi);
                    hit.sample = prev.sample;  // rescan covers the bracket's far sample
                }
                if (hit.t < lo - wtol || hit.t > hi + wtol) return;
                if (!guard_ok(stage, hit)) return;
                take(stage, hit, std::move(locals));
                return;
            }
            prev = cur;
        }
    }

    FeatureEval run() {
        prepare();
        if (tr.steps.empty()) return std::move(out);
        // Stage-1 anchors: the whole trace.
        int first_step = -1;
        for (size_t si = 0; si < tr.steps.size(); ++si) {
            if (!tr.steps[si].is_null && !tr.steps[si].samples.empty()) {
                first_step = static_cast<int>(si);
                break;
            }
        }
        if (first_step < 0) return std::move(out);

        std::vector<double> locals(f.spec.locals.size(), 0.0);
        if (events[0]) {
            Point start = at_sample(first_step, 0);
            if (!events[0]->labels.empty())
                advance_on_entry(0, start, 0.0, std::numeric_limits<double>::infinity(), kTol,
                                 locals);
            else
                advance_on_rise(0, start, 0.0, std::numeric_limits<double>::infinity(), kTol,
                                locals);
        } else {
            Point p = at_sample(first_step, 0);
            bool first = true;
            while (true) {
                if (!first && !next_position(p)) break;
                first = false;
                if (!spend()) break;
                if (guard_ok(0, p)) {
                    take(0, p, locals);
                    if (done()) break;
                }
            }
        }
        return std::move(out);
    }
};

}  // namespace

FeatureEval feature_values_on_trace(const Trace& tr, const BoundFeature& f,
                                    size_t max_matches) {
    // Variable mismatch reporting up front.
    auto check_cond = [&](const Condition& c) {
        for (const auto& p : c.conjuncts) {
            if (p.is_state()) continue;
            for (const auto* side : {&p.lhs, &p.rhs})
                for (const auto& t : side->terms)
                    if (tr.var_index(t.name) < 0)
                        fail_input("trace is missing variable '" + t.name +
                                   "' required by feature " + f.spec.name);
        }
    };
    for (const auto& st : f.stages) {
        check_cond(st.guard);
        for (const auto& ev : st.events) check_cond(ev.predicate);
        for (const auto& [_, cap] : st.captures) {
            if (cap.kind != CaptureExpr::Kind::Linear) continue;
            for (const auto& t : cap.expr.terms)
                if (tr.var_index(t.name) < 0)
                    fail_input("trace is missing variable '" + t.name +
                               "' required by feature " + f.spec.name);
        }
    }

    Replayer r(tr, f, max_matches);
    return r.run();
}

}  // namespace featkit
