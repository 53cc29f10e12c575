#include "monitor.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include "diag.hpp"

namespace featkit {

namespace {

std::string fresh_name(std::string base, const std::set<std::string>& taken) {
    while (taken.count(base)) base += "_";
    return base;
}

/// Closure of the negation, used as the watch-location invariant for a
/// numeric rising-edge predicate. Equalities have no closed complement of
/// the right shape; they contribute nothing (mild over-approximation on
/// grazing trajectories).
std::optional<Porv> negation_closure(const Porv& p) {
    if (p.is_state() || p.rel == Rel::Eq) return std::nullopt;
    Porv out = p;
    switch (p.rel) {
        case Rel::Le:
        case Rel::Lt: out.rel = Rel::Ge; break;
        case Rel::Ge:
        case Rel::Gt: out.rel = Rel::Le; break;
        case Rel::Eq: break;
    }
    return out;
}

void fold_params_expr(LinExpr& e, const ParamMap& params) {
    for (const auto& [n, v] : params) e.substitute(n, v);
}

void fold_params(Condition& c, const ParamMap& params) {
    for (auto& p : c.conjuncts) {
        if (p.is_state()) continue;
        fold_params_expr(p.lhs, params);
        fold_params_expr(p.rhs, params);
    }
}

void compose_with_reset(LinExpr& e, const NamedSeq<LinExpr>& reset) {
    // Simultaneous substitution: resets read the pre-state.
    LinExpr out = LinExpr::constant_of(e.constant);
    for (const auto& t : e.terms) {
        if (const LinExpr* r = reset.find(t.name)) {
            LinExpr scaled = *r;
            scaled.scale(t.coeff);
            out += scaled;
        } else {
            out.add_term(t.name, t.coeff);
        }
    }
    e = std::move(out);
}

void compose_with_reset(Condition& c, const NamedSeq<LinExpr>& reset) {
    for (auto& p : c.conjuncts) {
        if (p.is_state()) continue;
        compose_with_reset(p.lhs, reset);
        compose_with_reset(p.rhs, reset);
    }
}

double max_abs_constant(const Condition& c) {
    double m = 0;
    for (const auto& p : c.conjuncts) {
        if (p.is_state()) continue;
        m = std::max(m, std::abs(p.lhs.constant));
        m = std::max(m, std::abs(p.rhs.constant));
        for (const auto& t : p.lhs.terms) m = std::max(m, std::abs(t.coeff));
        for (const auto& t : p.rhs.terms) m = std::max(m, std::abs(t.coeff));
    }
    return m;
}

}  // namespace

MonitorAutomaton compile_monitor(const BoundFeature& f) {
    MonitorAutomaton m;
    m.feature_name = f.spec.name;
    m.stage_count = static_cast<int>(f.stages.size());
    for (int i = 0; i < m.stage_count; ++i) m.locations.push_back("q" + std::to_string(i));
    m.locations.push_back("accept");
    m.clock_name = "mon_clk";
    bool uses_time = false;
    for (const auto& st : f.stages)
        for (const auto& [_, cap] : st.captures)
            uses_time = uses_time || cap.kind == CaptureExpr::Kind::NowTime;
    m.time_name = uses_time ? "mon_time" : "";
    m.registers = f.spec.locals;
    m.feat_name = "feat";
    m.registers.push_back(m.feat_name);
    m.compute = f.compute;

    for (int k = 0; k < m.stage_count; ++k) {
        MonitorAutomaton::AdvanceEdge e;
        e.from_stage = k;
        if (k > 0) e.window = f.stages[k - 1].delay_to_next;
        e.stage_guard = f.stages[k].guard;
        if (!f.stages[k].events.empty()) e.event = f.stages[k].events.front().predicate;
        e.captures = f.stages[k].captures;
        e.into_accept = k + 1 == m.stage_count;
        m.edges.push_back(std::move(e));
    }
    return m;
}

namespace {

struct ProductBuilder {
    const HybridAutomaton& ha;
    const MonitorAutomaton& mon;
    ParamMap params;
    ProductModel pm;

    // Renames chosen against the model's namespace.
    std::string clock_v, time_v, feat_v;
    std::map<std::string, std::string> local_rename;

    ProductBuilder(const HybridAutomaton& h, const MonitorAutomaton& m) : ha(h), mon(m) {
        params = ha.param_map();
    }

    std::string product_loc_name(const std::string& model_loc, int stage) const {
        if (stage == mon.stage_count) return model_loc + "__accept";
        return model_loc + "__q" + std::to_string(stage);
    }

    void check_monitor_names() {
        auto check_expr = [&](const LinExpr& e) {
            for (const auto& t : e.terms) {
                if (!ha.has_variable(t.name) && !ha.parameters.contains(t.name))
                    fail_input("unresolved monitor predicate variable '" + t.name + "'");
            }
        };
        auto check_cond = [&](const Condition& c) {
            for (const auto& p : c.conjuncts) {
                if (p.is_state()) {
                    if (ha.location_index(p.state_label) < 0)
                        fail_input("feature references unknown location '" + p.state_label + "'");
                    continue;
                }
                check_expr(p.lhs);
                check_expr(p.rhs);
            }
        };
        for (const auto& e : mon.edges) {
            check_cond(e.stage_guard);
            if (e.event) check_cond(*e.event);
            for (const auto& [_, cap] : e.captures)
                if (cap.kind == CaptureExpr::Kind::Linear) check_expr(cap.expr);
        }
    }

    double sentinel() const {
        double m = 1.0;
        for (const auto& loc : ha.locations) {
            m = std::max(m, max_abs_constant(loc.invariant));
            for (const auto& [_, rhs] : loc.flow) m = std::max(m, std::abs(rhs.constant));
        }
        for (const auto& tr : ha.transitions) m = std::max(m, max_abs_constant(tr.guard));
        m = std::max(m, max_abs_constant(ha.initial));
        for (const auto& [_, v] : ha.parameters) m = std::max(m, std::abs(v));
        for (const auto& e : mon.edges) m = std::max(m, max_abs_constant(e.stage_guard));
        return -1000.0 * (1.0 + m);
    }

    ProductModel build() {
        auto diags = validate(ha);
        if (!diags.empty())
            fail_input("model does not validate: " + join_diagnostics(diags));
        check_monitor_names();

        std::set<std::string> taken(ha.variables.begin(), ha.variables.end());
        for (const auto& [pn, _] : ha.parameters) taken.insert(pn);

        clock_v = fresh_name(mon.clock_name, taken);
        taken.insert(clock_v);
        if (!mon.time_name.empty()) {
            time_v = fresh_name(mon.time_name, taken);
            taken.insert(time_v);
        }
        for (const auto& reg : mon.registers) {
            if (reg == mon.feat_name) continue;
            local_rename[reg] = fresh_name(reg, taken);
            taken.insert(local_rename[reg]);
        }
        feat_v = fresh_name(mon.feat_name, taken);
        taken.insert(feat_v);

        pm.source_model = ha.name;
        pm.source_feature = mon.feature_name;
        pm.feat_var = feat_v;
        pm.clock_var = clock_v;
        pm.time_var = time_v;
        pm.model_vars = ha.variables;
        pm.stage_count = mon.stage_count;
        pm.feat_sentinel = sentinel();

        HybridAutomaton& out = pm.automaton;
        out.name = ha.name + "_" + mon.feature_name;
        out.variables = ha.variables;
        out.variables.push_back(clock_v);
        pm.monitor_vars.push_back(clock_v);
        if (!time_v.empty()) {
            out.variables.push_back(time_v);
            pm.monitor_vars.push_back(time_v);
        }
        for (const auto& reg : mon.registers) {
            std::string name = reg == mon.feat_name ? feat_v : local_rename[reg];
            out.variables.push_back(name);
            pm.monitor_vars.push_back(name);
        }
        out.parameters = ha.parameters;

        build_locations(out);
        build_transitions(out);
        build_initial(out);
        prune_unreachable();
        return std::move(pm);
    }

    /// Stage guards, events and captures with parameters folded and locals
    /// renamed into the product namespace.
    Condition bound_cond(Condition c) const {
        fold_params(c, params);
        return c;
    }

    LinExpr capture_expr(const CaptureExpr& cap) const {
        if (cap.kind == CaptureExpr::Kind::NowTime) return LinExpr::variable(time_v);
        LinExpr e = cap.expr;
        fold_params_expr(e, params);
        return e;
    }

    void build_locations(HybridAutomaton& out) {
        for (size_t li = 0; li < ha.locations.size(); ++li) {
            const Location& ml = ha.locations[li];
            for (int s = 0; s <= mon.stage_count; ++s) {
                Location loc;
                loc.name = product_loc_name(ml.name, s);
                loc.urgent = ml.urgent;
                loc.flow = ml.flow;
                loc.flow.set(clock_v, LinExpr::constant_of(1.0));
                if (!time_v.empty()) loc.flow.set(time_v, LinExpr::constant_of(1.0));
                for (const auto& mv : pm.monitor_vars) {
                    if (mv == clock_v || mv == time_v) continue;
                    loc.flow.set(mv, LinExpr::constant_of(0.0));
                }
                loc.invariant = ml.invariant;
                if (s < mon.stage_count) {
                    const auto& edge = mon.edges[s];
                    if (edge.event) {
                        Condition ev = bound_cond(*edge.event);
                        for (const auto& p : ev.conjuncts) {
                            if (auto cl = negation_closure(p)) loc.invariant.add(*cl);
                        }
                    }
                }
                out.locations.push_back(std::move(loc));
                pm.loc_info.push_back({ml.name, s});
            }
        }
    }

    /// State predicates restrict which model locations carry an advance
    /// edge; the numeric remainder goes into the product guard.
    static bool loc_satisfies_state(const std::string& loc_name, const Condition& c) {
        for (const auto& p : c.conjuncts)
            if (p.is_state() && p.state_label != loc_name) return false;
        return true;
    }

    static Condition numeric_part(const Condition& c) {
        Condition out;
        for (const auto& p : c.conjuncts)
            if (!p.is_state()) out.add(p);
        return out;
    }

    Condition window_condition(const std::optional<DelayWindow>& w) const {
        Condition c;
        if (!w) return c;
        c.add(Porv::compare(LinExpr::variable(clock_v), Rel::Ge,
                            LinExpr::constant_of(w->lower)));
        if (w->upper)
            c.add(Porv::compare(LinExpr::variable(clock_v), Rel::Le,
                                LinExpr::constant_of(*w->upper)));
        return c;
    }

    /// Monitor-side resets for advance edge k: delay clock restarts, stage
    /// captures latch, and the accept edge writes the feature value. When
    /// the advance rides a model transition, capture and compute inputs are
    /// read post-reset.
    void add_monitor_resets(NamedSeq<LinExpr>& reset, const MonitorAutomaton::AdvanceEdge& edge,
                            const NamedSeq<LinExpr>* model_reset) const {
        reset.set(clock_v, LinExpr::constant_of(0.0));
        for (const auto& [local, cap] : edge.captures) {
            LinExpr e = capture_expr(cap);
            if (model_reset) compose_with_reset(e, *model_reset);
            reset.set(local_rename.at(local), std::move(e));
        }
        if (edge.into_accept) {
            LinExpr value = mon.compute;
            // Locals latched on this very edge feed compute directly.
            for (const auto& [local, cap] : edge.captures) {
                LinExpr e = capture_expr(cap);
                if (model_reset) compose_with_reset(e, *model_reset);
                value.substitute(local, e);
            }
            for (const auto& [local, renamed] : local_rename)
                value.substitute(local, LinExpr::variable(renamed));
            reset.set(feat_v, std::move(value));
        }
    }

    void build_transitions(HybridAutomaton& out) {
        // Model moves, one copy per monitor state.
        for (size_t ti = 0; ti < ha.transitions.size(); ++ti) {
            const Transition& mt = ha.transitions[ti];
            for (int s = 0; s <= mon.stage_count; ++s) {
                Transition tr;
                tr.source = product_loc_name(mt.source, s);
                tr.target = product_loc_name(mt.target, s);
                tr.guard = mt.guard;
                tr.reset = mt.reset;
                out.transitions.push_back(std::move(tr));
                pm.trans_info.push_back(
                    {ProductModel::TransKind::Model, static_cast<int>(ti), -1, std::nullopt});
            }
        }

        // Advance edges.
        for (int k = 0; k < mon.stage_count; ++k) {
            const auto& edge = mon.edges[k];
            Condition stage_guard = bound_cond(edge.stage_guard);
            Condition guard_num = numeric_part(stage_guard);
            Condition window = window_condition(k > 0 ? edge.window : std::nullopt);
            std::optional<Condition> event;
            if (edge.event) event = bound_cond(*edge.event);

            bool state_event = event && std::all_of(event->conjuncts.begin(),
                                                    event->conjuncts.end(),
                                                    [](const Porv& p) { return p.is_state(); });

            if (event && state_event) {
                // The rising edge of a location predicate is a model jump
                // into the named location; the advance synchronizes with it.
                for (size_t ti = 0; ti < ha.transitions.size(); ++ti) {
                    const Transition& mt = ha.transitions[ti];
                    if (mt.source == mt.target) continue;
                    bool target_ok = true, source_already = true;
                    for (const auto& p : event->conjuncts) {
                        target_ok = target_ok && p.state_label == mt.target;
                        source_already = source_already && p.state_label == mt.source;
                    }
                    if (!target_ok || source_already) continue;
                    if (!loc_satisfies_state(mt.target, stage_guard)) continue;

                    Transition tr;
                    tr.source = product_loc_name(mt.source, k);
                    tr.target = product_loc_name(mt.target, k + 1);
                    tr.guard = mt.guard;
                    tr.guard.add_all(window);
                    Condition entry_guard = guard_num;
                    compose_with_reset(entry_guard, mt.reset);
                    tr.guard.add_all(entry_guard);
                    tr.reset = mt.reset;
                    add_monitor_resets(tr.reset, edge, &mt.reset);
                    out.transitions.push_back(std::move(tr));
                    pm.trans_info.push_back({ProductModel::TransKind::SyncAdvance,
                                             static_cast<int>(ti), k, std::nullopt});
                }
                continue;
            }

            std::optional<Porv> event_porv;
            if (event) {
                // Parser guarantees: exactly one numeric conjunct, no state.
                event_porv = event->conjuncts.front();
            }

            for (const auto& ml : ha.locations) {
                if (!loc_satisfies_state(ml.name, stage_guard)) continue;
                Transition tr;
                tr.source = product_loc_name(ml.name, k);
                tr.target = product_loc_name(ml.name, k + 1);
                if (event_porv) tr.guard.add(*event_porv);
                tr.guard.add_all(guard_num);
                tr.guard.add_all(window);
                add_monitor_resets(tr.reset, edge, nullptr);
                out.transitions.push_back(std::move(tr));
                pm.trans_info.push_back(
                    {ProductModel::TransKind::Advance, -1, k, event_porv});
            }
        }
    }

    void build_initial(HybridAutomaton& out) {
        out.initial_location = product_loc_name(ha.initial_location, 0);
        out.initial = ha.initial;
        out.initial.add(Porv::compare(LinExpr::variable(clock_v), Rel::Eq,
                                      LinExpr::constant_of(0.0)));
        if (!time_v.empty())
            out.initial.add(Porv::compare(LinExpr::variable(time_v), Rel::Eq,
                                          LinExpr::constant_of(0.0)));
        for (const auto& mv : pm.monitor_vars) {
            if (mv == clock_v || mv == time_v) continue;
            out.initial.add(Porv::compare(LinExpr::variable(mv), Rel::Eq,
                                          LinExpr::constant_of(pm.feat_sentinel)));
        }
    }

    void prune_unreachable() {
        HybridAutomaton& out = pm.automaton;
        std::set<std::string> reach = {out.initial_location};
        std::deque<std::string> work = {out.initial_location};
        while (!work.empty()) {
            std::string cur = work.front();
            work.pop_front();
            for (const auto& tr : out.transitions) {
                if (tr.source == cur && !reach.count(tr.target)) {
                    reach.insert(tr.target);
                    work.push_back(tr.target);
                }
            }
        }

        std::vector<Location> locs;
        std::vector<ProductModel::LocInfo> infos;
        for (size_t i = 0; i < out.locations.size(); ++i) {
            if (!reach.count(out.locations[i].name)) continue;
            locs.push_back(std::move(out.locations[i]));
            infos.push_back(pm.loc_info[i]);
        }
        out.locations = std::move(locs);
        pm.loc_info = std::move(infos);

        std::vector<Transition> trs;
        std::vector<ProductModel::TransInfo> tinfos;
        for (size_t i = 0; i < out.transitions.size(); ++i) {
            const auto& tr = out.transitions[i];
            if (!reach.count(tr.source) || !reach.count(tr.target)) continue;
            trs.push_back(std::move(out.transitions[i]));
            tinfos.push_back(pm.trans_info[i]);
        }
        out.transitions = std::move(trs);
        pm.trans_info = std::move(tinfos);

        pm.accept_locations.clear();
        for (size_t i = 0; i < out.locations.size(); ++i)
            if (pm.is_accept(static_cast<int>(i)))
                pm.accept_locations.push_back(out.locations[i].name);
    }
};

}  // namespace

ProductModel product(const HybridAutomaton& ha, const MonitorAutomaton& m) {
    return ProductBuilder(ha, m).build();
}

ProductModel wrap_plain(const HybridAutomaton& ha) {
    ProductModel pm;
    pm.automaton = ha;
    pm.source_model = ha.name;
    pm.model_vars = ha.variables;
    pm.stage_count = 0;
    for (const auto& loc : ha.locations) {
        pm.loc_info.push_back({loc.name, -1});
    }
    pm.trans_info.resize(ha.transitions.size());
    return pm;
}

}  // namespace featkit
