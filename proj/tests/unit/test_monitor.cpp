#include <doctest.h>

#include "core/flowpipe.hpp"
#include "core/haslac.hpp"
#include "core/monitor.hpp"
#include "core/sim.hpp"
#include "support/testutil.hpp"

using namespace featkit;

namespace {

ProductModel ramp_crossing_product(const char* model = "ramp.ha", double th = 2.0) {
    auto ha = parse_haslac({test::model_text(model), model});
    auto f = parse_feature(test::model_text("crossing.fia"));
    auto bf = bind_feature_params(f, {{"TH", th}});
    return product(ha, compile_monitor(bf));
}

}  // namespace

TEST_CASE("settlingTime compiles to stages+1 locations and one edge per stage") {
    auto f = parse_feature(test::model_text("settling_time.fia"));
    auto bf = bind_feature_params(f, {{"Vr", 12.0}, {"E", 0.5}});
    auto mon = compile_monitor(bf);
    CHECK(mon.locations.size() == 4);
    CHECK(mon.edges.size() == 3);
    CHECK(mon.registers == std::vector<std::string>{"st", "feat"});
    CHECK(mon.locations.back() == "accept");
}

TEST_CASE("a one-stage feature compiles to two locations and one edge") {
    auto f = parse_feature("feature f();\nbegin\nvar a;\n(x>=1), a=$time |-> f = a;\nend");
    auto mon = compile_monitor(bind_feature_params(f, {}));
    CHECK(mon.locations.size() == 2);
    CHECK(mon.edges.size() == 1);
}

TEST_CASE("an open delay window contributes only the clock lower bound") {
    auto f = parse_feature(
        "feature f();\nbegin\nvar a;\n(x>=1) ##[0:$] (x>=2), a=$time |-> f = a;\nend");
    auto ha = parse_haslac({test::model_text("ramp.ha"), "ramp.ha"});
    auto pm = product(ha, compile_monitor(bind_feature_params(f, {})));
    // Find the q1 -> accept advance edge and inspect its clock conjuncts.
    bool found = false;
    for (size_t ti = 0; ti < pm.automaton.transitions.size(); ++ti) {
        if (pm.trans_info[ti].kind != ProductModel::TransKind::Advance) continue;
        if (pm.trans_info[ti].edge != 1) continue;
        found = true;
        int lower = 0, upper = 0;
        for (const auto& p : pm.automaton.transitions[ti].guard.conjuncts) {
            if (p.is_state()) continue;
            if (!p.lhs.references(pm.clock_var)) continue;
            if (p.rel == Rel::Ge) ++lower;
            if (p.rel == Rel::Le) ++upper;
        }
        CHECK(lower == 1);
        CHECK(upper == 0);
    }
    CHECK(found);
}

TEST_CASE("buck x settlingTime: eight pairs before pruning, at most eight after") {
    auto ha = parse_haslac({test::model_text("buck.ha"), "buck.ha"});
    auto f = parse_feature(test::model_text("settling_time.fia"));
    auto bf = bind_feature_params(f, {{"Vr", 12.0}, {"E", 0.5}});
    auto mon = compile_monitor(bf);
    // Exhaustive pair enumeration: 2 model locations x 4 monitor locations.
    size_t full = ha.locations.size() * mon.locations.size();
    CHECK(full == 8);
    auto pm = product(ha, mon);
    CHECK(pm.automaton.locations.size() <= 8);
    CHECK(validate(pm.automaton).empty());
    CHECK(pm.accept_locations.size() >= 1);
}

TEST_CASE("a trivially-true one-stage monitor doubles the model") {
    auto ha = parse_haslac({test::model_text("buck.ha"), "buck.ha"});
    auto f = parse_feature("feature g();\nbegin\nvar z;\n(v>=v), z=$time |-> g = z;\nend");
    auto pm = product(ha, compile_monitor(bind_feature_params(f, {})));
    CHECK(pm.automaton.locations.size() == 2 * ha.locations.size());
    // Every model transition appears in both monitor rows.
    int model_edges = 0;
    for (const auto& info : pm.trans_info)
        if (info.kind == ProductModel::TransKind::Model) ++model_edges;
    CHECK(model_edges == static_cast<int>(ha.transitions.size()) * 2);
}

TEST_CASE("ramp product accepts exactly at the analytic crossing") {
    auto pm = ramp_crossing_product();
    SimSettings s;
    s.step = 1e-3;
    s.horizon = 3.0;
    s.max_jumps = 4;
    Valuation start;
    start.mode = "run";
    start.values["x"] = 0.0;
    auto res = simulate(pm, start, s);
    REQUIRE(res.accepted);
    CHECK(res.feat_value == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(res.accept_time == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("projection of a product run replays against the model") {
    auto ha = parse_haslac({test::model_text("buck.ha"), "buck.ha"});
    auto f = parse_feature(test::model_text("settling_time.fia"));
    auto pm = product(ha, compile_monitor(bind_feature_params(f, {{"Vr", 12.0}, {"E", 0.5}})));
    SimSettings s;
    s.step = 2e-7;
    s.horizon = 3e-4;
    s.max_jumps = 200;
    Valuation start;
    start.mode = "closed";
    start.values = {{"v", 0.0}, {"i", 0.0}, {"t", 0.0}};
    auto res = simulate(pm, start, s);
    Trace proj = project_to_model(pm, res.trace);
    CHECK(proj.vars == ha.variables);

    // Every projected mode change corresponds to a model transition whose
    // guard held at the jump instant.
    ParamMap params = ha.param_map();
    int checked = 0;
    for (size_t k = 0; k + 1 < proj.steps.size(); ++k) {
        const auto& a = proj.steps[k];
        const auto& b = proj.steps[k + 1];
        if (a.mode == b.mode) continue;
        bool matched = false;
        for (const auto& tr : ha.transitions) {
            if (tr.source != a.mode || tr.target != b.mode) continue;
            Valuation v;
            v.mode = a.mode;
            const auto& last = a.samples.back();
            for (size_t vi = 0; vi < proj.vars.size(); ++vi)
                v.values[proj.vars[vi]] = last.values[vi];
            // Guards hold at the located switching point, up to the
            // crossing-location tolerance.
            bool ok = true;
            for (const auto& p : tr.guard.conjuncts) {
                if (p.is_state()) continue;
                double lhs = eval_lin(p.lhs, v, params), rhs = eval_lin(p.rhs, v, params);
                bool near_boundary = std::abs(lhs - rhs) <= 1e-6 * (1.0 + std::abs(rhs));
                ok = ok && (near_boundary || eval_porv(p, v, params));
            }
            matched = matched || ok;
        }
        CHECK(matched);
        ++checked;
    }
    CHECK(checked > 10);
}
