#include "sim.hpp"

#include <algorithm>
#include <cmath>

#include "diag.hpp"

namespace featkit {

namespace {

constexpr double kRelTol = 1e-9;
constexpr double kHuge = 1e300;

CompiledLin compile_lin(const LinExpr& e, const std::vector<std::string>& vars,
                        const ParamMap& params) {
    CompiledLin out;
    out.c = e.constant;
    for (const auto& t : e.terms) {
        auto it = std::find(vars.begin(), vars.end(), t.name);
        if (it != vars.end()) {
            out.terms.push_back({static_cast<int>(it - vars.begin()), t.coeff});
            continue;
        }
        auto pit = params.find(t.name);
        if (pit == params.end()) fail_input("unresolved name '" + t.name + "' in expression");
        out.c += t.coeff * pit->second;
    }
    return out;
}

}  // namespace

void SimSettings::check() const {
    if (!(step > 0)) fail_input("step must be positive");
    if (!(horizon > 0)) fail_input("horizon must be positive");
    if (step > horizon) fail_input("step must not exceed the horizon");
    if (max_jumps < 0) fail_input("max_jumps must be nonnegative");
}

int CompiledModel::loc_index(const std::string& name) const {
    for (size_t i = 0; i < pm->automaton.locations.size(); ++i)
        if (pm->automaton.locations[i].name == name) return static_cast<int>(i);
    return -1;
}

CompiledModel compile_model(const ProductModel& pm) {
    CompiledModel cm;
    cm.pm = &pm;
    const HybridAutomaton& ha = pm.automaton;
    cm.vars = ha.variables;
    ParamMap params = ha.param_map();
    int n = static_cast<int>(cm.vars.size());

    auto var_index = [&](const std::string& v) {
        auto it = std::find(cm.vars.begin(), cm.vars.end(), v);
        return it == cm.vars.end() ? -1 : static_cast<int>(it - cm.vars.begin());
    };
    cm.feat_idx = pm.feat_var.empty() ? -1 : var_index(pm.feat_var);
    cm.clock_idx = pm.clock_var.empty() ? -1 : var_index(pm.clock_var);
    cm.time_idx = pm.time_var.empty() ? -1 : var_index(pm.time_var);

    for (size_t li = 0; li < ha.locations.size(); ++li) {
        const Location& l = ha.locations[li];
        CompiledLoc cl;
        cl.urgent = l.urgent;
        cl.A = Mat(n);
        cl.b.assign(n, 0.0);
        for (const auto& [var, rhs] : l.flow) {
            int vi = var_index(var);
            if (vi < 0) fail_input("flow for undeclared variable '" + var + "'");
            CompiledLin row = compile_lin(rhs, cm.vars, params);
            cl.b[vi] = row.c;
            for (const auto& t : row.terms) cl.A.at(vi, t.idx) = t.k;
        }
        // State predicates inside a product location refer to the model side.
        cl.invariant = compile_condition(l.invariant, cm.vars, params,
                                         pm.loc_info[li].model_loc);
        cm.locs.push_back(std::move(cl));
    }

    for (size_t ti = 0; ti < ha.transitions.size(); ++ti) {
        const Transition& tr = ha.transitions[ti];
        CompiledTrans ct;
        ct.source = cm.loc_index(tr.source);
        ct.target = cm.loc_index(tr.target);
        if (ct.source < 0 || ct.target < 0)
            fail_input("transition references unknown location '" + tr.source + "' or '" +
                       tr.target + "'");
        ct.guard = compile_condition(tr.guard, cm.vars, params,
                                     pm.loc_info[ct.source].model_loc);
        for (const auto& [var, rhs] : tr.reset) {
            int vi = var_index(var);
            if (vi < 0) fail_input("reset of undeclared variable '" + var + "'");
            ct.resets.emplace_back(vi, compile_lin(rhs, cm.vars, params));
        }
        ct.info = pm.trans_info[ti];
        cm.locs[ct.source].out.push_back(static_cast<int>(ti));
        cm.trans.push_back(std::move(ct));
    }

    cm.initial_loc = cm.loc_index(ha.initial_location);
    if (cm.initial_loc < 0) fail_input("initial location '" + ha.initial_location + "' unknown");
    cm.initial = compile_condition(ha.initial, cm.vars, params,
                                   pm.loc_info[cm.initial_loc].model_loc);
    return cm;
}

std::vector<double> flow_at(const CompiledLoc& loc, const std::vector<double>& x, double h) {
    return affine_step(loc.A, loc.b, h).apply(x);
}

IBox initial_box(const CompiledModel& cm) {
    IBox box(cm.vars.size(), Interval{-kHuge, kHuge});
    if (!tighten_box(box, cm.initial))
        fail_analysis("initial condition is unsatisfiable");
    for (size_t i = 0; i < box.size(); ++i) {
        if (box[i].lo <= -1e299 || box[i].hi >= 1e299)
            fail_analysis("unbounded initial set: variable '" + cm.vars[i] +
                          "' has no finite bounds in the initial condition");
    }
    return box;
}

Valuation initial_midpoint(const CompiledModel& cm) {
    IBox box = initial_box(cm);
    Valuation v;
    v.mode = cm.pm->automaton.initial_location;
    for (size_t i = 0; i < cm.vars.size(); ++i) v.values[cm.vars[i]] = box[i].mid();
    return v;
}

// ============================================================================
// Simulation
// ============================================================================

namespace {

struct Runner {
    const CompiledModel& cm;
    const ProductModel& pm;
    SimSettings s;
    SimPolicy policy;

    std::vector<double> x;
    int loc = -1;
    double t = 0.0;
    double stage_entry_t = 0.0;
    std::vector<int> skip_left;  // per advance edge
    SimResult res;
    std::map<int, AffineStep> full_step;  // per location, for h == s.step
    bool halted = false;

    Runner(const CompiledModel& model, const SimSettings& settings, const SimPolicy& pol)
        : cm(model), pm(*model.pm), s(settings), policy(pol) {
        skip_left.assign(static_cast<size_t>(std::max(0, pm.stage_count)), 0);
        for (size_t k = 0; k < skip_left.size(); ++k)
            skip_left[k] = policy.for_stage(static_cast<int>(k)).skip_events;
    }

    const std::vector<double>& step_once(double h, std::vector<double>& out) {
        if (h == s.step) {
            auto it = full_step.find(loc);
            if (it == full_step.end())
                it = full_step.emplace(loc, affine_step(cm.locs[loc].A, cm.locs[loc].b, h)).first;
            out = it->second.apply(x);
        } else {
            out = affine_step(cm.locs[loc].A, cm.locs[loc].b, h).apply(x);
        }
        return out;
    }

    void record_sample() {
        TraceStep& st = res.trace.steps.back();
        st.samples.push_back({t, x});
        st.t1 = t;
    }

    void begin_step() {
        TraceStep st;
        st.index = static_cast<int>(res.trace.steps.size());
        st.mode = pm.automaton.locations[loc].name;
        st.t0 = t;
        st.t1 = t;
        res.trace.steps.push_back(std::move(st));
        record_sample();
    }

    int priority_rank(const CompiledTrans& tr) const {
        switch (tr.info.kind) {
            case ProductModel::TransKind::Advance:
                return tr.info.event_porv ? 0 : 2;
            case ProductModel::TransKind::SyncAdvance: return 1;
            case ProductModel::TransKind::Model: return 3;
        }
        return 3;
    }

    bool advance_delay_ok(const CompiledTrans& tr) const {
        if (tr.info.kind != ProductModel::TransKind::Advance || tr.info.event_porv)
            return true;
        double d = policy.for_stage(tr.info.edge).delay;
        return t >= stage_entry_t + d - 1e-15;
    }

    /// Picks the highest-priority enabled transition whose landing state
    /// satisfies the target invariant; honors the event-skip policy.
    int choose_transition(std::vector<double>& landing) {
        std::vector<int> excluded;
        while (true) {
            int best = -1, best_rank = 99;
            std::vector<double> best_landing;
            for (int ti : cm.locs[loc].out) {
                if (std::find(excluded.begin(), excluded.end(), ti) != excluded.end()) continue;
                const CompiledTrans& tr = cm.trans[ti];
                if (!tr.guard.sat_at(x, kRelTol)) continue;
                if (!advance_delay_ok(tr)) continue;
                std::vector<double> y = tr.apply(x);
                if (!cm.locs[tr.target].invariant.sat_at(y, kRelTol)) continue;
                int rank = priority_rank(tr);
                if (rank < best_rank) {
                    best_rank = rank;
                    best = ti;
                    best_landing = std::move(y);
                }
            }
            if (best < 0) return -1;
            const CompiledTrans& tr = cm.trans[best];
            if (tr.info.kind == ProductModel::TransKind::SyncAdvance && tr.info.edge >= 0 &&
                tr.info.edge < static_cast<int>(skip_left.size()) &&
                skip_left[tr.info.edge] > 0) {
                skip_left[tr.info.edge]--;
                excluded.push_back(best);
                continue;
            }
            landing = std::move(best_landing);
            return best;
        }
    }

    void apply_transition(int ti, std::vector<double>&& landing) {
        const CompiledTrans& tr = cm.trans[ti];
        int old_stage = cm.stage_of(loc);
        x = std::move(landing);
        loc = tr.target;
        res.jumps++;
        if (cm.stage_of(loc) != old_stage) stage_entry_t = t;
        begin_step();
        if (pm.is_accept(loc) && !res.accepted) {
            res.accepted = true;
            res.feat_value = cm.feat_idx >= 0 ? x[cm.feat_idx] : 0.0;
            res.accept_time = t;
        }
    }

    /// Chains zero-time jumps at the current instant. Returns false when the
    /// run must stop (deadlock, jump budget).
    bool instant_jumps() {
        while (true) {
            std::vector<double> landing;
            int ti = choose_transition(landing);
            if (ti < 0) {
                if (cm.locs[loc].urgent || !cm.locs[loc].invariant.sat_at(x, kRelTol)) {
                    res.reason = StopReason::Deadlock;
                    return false;
                }
                return true;
            }
            if (res.jumps >= s.max_jumps) {
                res.reason = StopReason::JumpBudget;
                return false;
            }
            apply_transition(ti, std::move(landing));
        }
    }

    /// First point in (0, h] where `flip` changes from its value at 0,
    /// located to time tolerance step*1e-6. `at_h` is the state at h.
    template <typename Pred>
    double bisect_flip(double h, Pred pred, bool base) {
        double lo = 0.0, hi = h;
        double tol = s.step * 1e-6;
        std::vector<double> probe;
        while (hi - lo > tol) {
            double mid = 0.5 * (lo + hi);
            probe = flow_at(cm.locs[loc], x, mid);
            if (pred(probe) == base)
                lo = mid;
            else
                hi = mid;
        }
        return hi;
    }

    void run(const Valuation& start) {
        // Layout the start state; absent monitor registers take their pinned
        // initial values.
        x.assign(cm.vars.size(), 0.0);
        for (size_t i = 0; i < cm.vars.size(); ++i) {
            auto it = start.values.find(cm.vars[i]);
            if (it != start.values.end()) {
                x[i] = it->second;
                continue;
            }
            bool is_model_var = std::find(pm.model_vars.begin(), pm.model_vars.end(),
                                          cm.vars[i]) != pm.model_vars.end();
            if (is_model_var)
                fail_input("start valuation misses variable '" + cm.vars[i] + "'");
            if (static_cast<int>(i) == cm.clock_idx || static_cast<int>(i) == cm.time_idx)
                x[i] = 0.0;
            else
                x[i] = pm.feat_sentinel;
        }
        t = start.time;

        loc = cm.loc_index(start.mode);
        if (loc < 0 && pm.has_monitor()) loc = cm.loc_index(start.mode + "__q0");
        if (loc < 0) fail_input("unknown start location '" + start.mode + "'");

        if (loc == cm.initial_loc && t == 0.0 && !cm.initial.sat_at(x, 1e-7))
            fail_input("start valuation does not satisfy the initial condition");

        stage_entry_t = t;
        begin_step();

        if (!instant_jumps()) return;

        const double teps = s.step * 1e-9;
        long hard_cap =
            static_cast<long>(std::ceil(s.horizon / s.step) + 8) * (s.max_jumps + 2) + 1024;

        while (t < s.horizon - teps) {
            if (res.steps_taken > hard_cap)
                fail_analysis("simulation exceeded its step budget (possible Zeno behavior)");
            double h = std::min(s.step, s.horizon - t);
            std::vector<double> x1;
            step_once(h, x1);

            // Earliest event inside (t, t+h]: invariant exit or a guard
            // becoming enabled for a transition that fires off-grid.
            double best_tau = kHuge;
            bool inv_exit = false;
            const CompiledLoc& cl = cm.locs[loc];
            if (!cl.invariant.sat_at(x1, kRelTol)) {
                double tau = bisect_flip(
                    h, [&](const std::vector<double>& p) { return cl.invariant.sat_at(p, kRelTol); },
                    true);
                best_tau = tau;
                inv_exit = true;
            }
            for (int ti : cl.out) {
                const CompiledTrans& tr = cm.trans[ti];
                bool bisected_kind = tr.info.kind == ProductModel::TransKind::Model ||
                                     tr.info.kind == ProductModel::TransKind::SyncAdvance ||
                                     (tr.info.kind == ProductModel::TransKind::Advance &&
                                      tr.info.event_porv.has_value());
                if (!bisected_kind) continue;
                if (tr.guard.sat_at(x, kRelTol)) continue;  // already handled at the endpoint
                if (!tr.guard.sat_at(x1, kRelTol)) continue;
                double tau = bisect_flip(
                    h, [&](const std::vector<double>& p) { return tr.guard.sat_at(p, kRelTol); },
                    false);
                if (tau < best_tau) {
                    best_tau = tau;
                    inv_exit = false;
                }
            }

            if (best_tau >= kHuge) {
                x = std::move(x1);
                t += h;
                res.steps_taken++;
                record_sample();
                if (!instant_jumps()) return;
                continue;
            }

            x = flow_at(cl, x, best_tau);
            t += best_tau;
            res.steps_taken++;
            record_sample();
            if (!instant_jumps()) return;
            (void)inv_exit;
        }
        res.reason = StopReason::Horizon;
    }
};

}  // namespace

SimResult simulate(const CompiledModel& cm, const Valuation& start, const SimSettings& s,
                   const SimPolicy& policy) {
    s.check();
    Runner r(cm, s, policy);
    r.res.trace.model = cm.pm->automaton.name;
    r.res.trace.source = "simulation";
    r.res.trace.vars = cm.vars;
    r.run(start);
    return std::move(r.res);
}

SimResult simulate(const ProductModel& pm, const Valuation& start, const SimSettings& s,
                   const SimPolicy& policy) {
    CompiledModel cm = compile_model(pm);
    return simulate(cm, start, s, policy);
}

Trace project_to_model(const ProductModel& pm, const Trace& product_trace) {
    Trace out;
    out.model = pm.source_model;
    out.source = product_trace.source;
    out.vars = pm.model_vars;
    out.note = product_trace.note;

    std::vector<int> keep;
    for (const auto& v : pm.model_vars) keep.push_back(product_trace.var_index(v));

    std::map<std::string, std::string> mode_map;
    for (size_t i = 0; i < pm.automaton.locations.size(); ++i)
        mode_map[pm.automaton.locations[i].name] = pm.loc_info[i].model_loc;

    for (const auto& st : product_trace.steps) {
        TraceStep ns;
        ns.index = st.index;
        auto it = mode_map.find(st.mode);
        ns.mode = it == mode_map.end() ? st.mode : it->second;
        ns.t0 = st.t0;
        ns.t1 = st.t1;
        ns.is_null = st.is_null;
        for (const auto& s : st.samples) {
            TraceSample out_s;
            out_s.t = s.t;
            for (int ki : keep) out_s.values.push_back(ki >= 0 ? s.values[ki] : 0.0);
            ns.samples.push_back(std::move(out_s));
        }
        out.steps.push_back(std::move(ns));
    }
    return out;
}

}  // namespace featkit
