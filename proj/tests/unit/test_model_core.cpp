#include <doctest.h>

#include <random>

#include "core/automaton.hpp"
#include "core/haslac.hpp"
#include "support/testutil.hpp"

using namespace featkit;

namespace {

HybridAutomaton tiny_two_var() {
    HybridAutomaton ha;
    ha.name = "tiny";
    ha.variables = {"x", "y"};
    Location l;
    l.name = "only";
    l.flow.set("x", LinExpr::constant_of(1.0));
    l.flow.set("y", LinExpr::variable("x"));
    ha.locations.push_back(l);
    ha.initial_location = "only";
    return ha;
}

}  // namespace

TEST_CASE("eval_lin resolves names against the valuation, then parameters") {
    // D*T as an expression over the parameter D with T folded in.
    LinExpr e;
    e.add_term("D", 1e-05);
    Valuation v;
    ParamMap params{{"D", 0.51667}, {"T", 1e-05}};
    double r = eval_lin(e, v, params);
    CHECK(r == 0.51667 * 1e-05);
    CHECK(r == doctest::Approx(5.1667e-06).epsilon(1e-12));
}

TEST_CASE("eval_lin on a constant expression") {
    CHECK(eval_lin(LinExpr::constant_of(12.0), {}, {}) == 12.0);
}

TEST_CASE("eval_lin with a zero coefficient") {
    LinExpr e;
    e.add_term("i", 0.0);  // canonical form drops the term
    Valuation v;
    v.values["i"] = 7.0;
    CHECK(eval_lin(e, v, {}) == 0.0);
}

TEST_CASE("eval_lin reports unresolved names") {
    LinExpr e = LinExpr::variable("ghost");
    CHECK_THROWS_WITH_AS(eval_lin(e, {}, {}), doctest::Contains("ghost"), Error);
}

TEST_CASE("eval_condition includes the closed boundary") {
    // t >= D*T at exactly t = D*T.
    ParamMap params{{"D", 0.51667}, {"T", 1e-05}};
    Porv p = Porv::compare(LinExpr::variable("t"), Rel::Ge,
                           LinExpr::constant_of(0.51667 * 1e-05));
    Valuation v;
    v.values["t"] = 0.51667 * 1e-05;
    Condition c;
    c.add(p);
    CHECK(eval_condition(c, v, params));
}

TEST_CASE("eval_condition rejects a strict violation") {
    // v <= Vr + E with Vr=12, E=0.5, v=13.
    LinExpr rhs;
    rhs.add_term("Vr", 1.0);
    rhs.add_term("E", 1.0);
    Condition c;
    c.add(Porv::compare(LinExpr::variable("v"), Rel::Le, rhs));
    Valuation v;
    v.values["v"] = 13.0;
    CHECK_FALSE(eval_condition(c, v, {{"Vr", 12.0}, {"E", 0.5}}));
}

TEST_CASE("empty condition is true") {
    CHECK(eval_condition(Condition{}, {}, {}));
}

TEST_CASE("conjunction splits: c1 && c2 equals c1 AND c2") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> coeff(-3.0, 3.0);
    for (int iter = 0; iter < 200; ++iter) {
        auto rnd_porv = [&] {
            LinExpr l, r;
            l.add_term("x", coeff(rng));
            l.constant = coeff(rng);
            r.add_term("y", coeff(rng));
            Rel rel = static_cast<Rel>(iter % 5);
            return Porv::compare(l, rel, r);
        };
        Porv p1 = rnd_porv(), p2 = rnd_porv();
        Condition c1, c2, both;
        c1.add(p1);
        c2.add(p2);
        both.add(p1);
        both.add(p2);
        Valuation v;
        v.values["x"] = coeff(rng);
        v.values["y"] = coeff(rng);
        CHECK(eval_condition(both, v, {}) ==
              (eval_condition(c1, v, {}) && eval_condition(c2, v, {})));
    }
}

TEST_CASE("eval_lin is affine: increments are independent of the constant term") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> coeff(-5.0, 5.0);
    for (int iter = 0; iter < 100; ++iter) {
        LinExpr e;
        e.add_term("x", coeff(rng));
        e.add_term("y", coeff(rng));
        e.constant = coeff(rng);
        LinExpr shifted = e;
        shifted.constant = coeff(rng);

        Valuation v, w, vw;
        v.values["x"] = coeff(rng);
        v.values["y"] = coeff(rng);
        w.values["x"] = coeff(rng);
        w.values["y"] = coeff(rng);
        vw.values["x"] = v.values["x"] + w.values["x"];
        vw.values["y"] = v.values["y"] + w.values["y"];

        double d1 = eval_lin(e, vw, {}) - eval_lin(e, w, {});
        double d2 = eval_lin(shifted, vw, {}) - eval_lin(shifted, w, {});
        CHECK(d1 == doctest::Approx(d2).epsilon(1e-12));
    }
}

TEST_CASE("validate accepts the buck model") {
    auto ha = parse_haslac({test::model_text("buck.ha"), "buck.ha"});
    CHECK(validate(ha).empty());
}

TEST_CASE("validate flags a duplicate location") {
    HybridAutomaton ha = tiny_two_var();
    ha.locations.push_back(ha.locations.front());
    auto diags = validate(ha);
    bool found = false;
    for (const auto& d : diags) found = found || d.message.find("duplicate location") == 0;
    CHECK(found);
}

TEST_CASE("validate flags an incomplete flow") {
    HybridAutomaton ha = tiny_two_var();
    ha.locations[0].flow.items.pop_back();  // drop the ODE for y
    auto diags = validate(ha);
    REQUIRE_FALSE(diags.empty());
    bool found = false;
    for (const auto& d : diags) found = found || d.message.find("incomplete flow") == 0;
    CHECK(found);
}

TEST_CASE("validate is pure") {
    HybridAutomaton ha = tiny_two_var();
    ha.locations[0].invariant.add(
        Porv::compare(LinExpr::variable("x"), Rel::Le, LinExpr::constant_of(2)));
    auto a = validate(ha);
    auto b = validate(ha);
    CHECK(a == b);
}
