#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "core/diag.hpp"
#include "core/drh.hpp"
#include "core/flowpipe.hpp"
#include "core/haslac.hpp"
#include "core/refine.hpp"
#include "core/trace_eval.hpp"
#include "support/testutil.hpp"

using namespace featkit;
namespace fs = std::filesystem;

namespace {

ProductModel ramp_product(const char* model = "ramp.ha") {
    auto ha = parse_haslac({test::model_text(model), model});
    auto f = parse_feature(test::model_text("crossing.fia"));
    return product(ha, compile_monitor(bind_feature_params(f, {{"TH", 2.0}})));
}

SimSettings ramp_sim() {
    SimSettings s;
    s.step = 1e-3;
    s.horizon = 3.0;
    s.max_jumps = 4;
    return s;
}

RefineSettings builtin_settings() {
    RefineSettings rs;
    rs.K = 1;
    rs.eps = 0.01;
    rs.oracle = OracleKind::Builtin;
    rs.time_horizon = 3.0;
    rs.sample_budget = 200;
    return rs;
}

}  // namespace

TEST_CASE("feasible: SAT near the analytic crossing with a replayable witness") {
    auto pm = ramp_product();
    auto res = feasible(pm, 1.9, 2.1, builtin_settings(), ramp_sim());
    REQUIRE(res.verdict == Verdict::Sat);
    REQUIRE(res.witness_value.has_value());
    CHECK(*res.witness_value == doctest::Approx(2.0).epsilon(1e-3));

    // The witness replays to a value inside the queried interval.
    auto f = parse_feature(test::model_text("crossing.fia"));
    auto bf = bind_feature_params(f, {{"TH", 2.0}});
    auto eval = feature_values_on_trace(project_to_model(pm, *res.witness), bf);
    REQUIRE_FALSE(eval.values.empty());
    bool inside = false;
    for (double v : eval.values) inside = inside || (v >= 1.9 - 2e-3 && v <= 2.1 + 2e-3);
    CHECK(inside);
}

TEST_CASE("feasible: UNSAT beyond the reachable feature values") {
    auto pm = ramp_product();
    auto res = feasible(pm, 3.0, 4.0, builtin_settings(), ramp_sim());
    CHECK(res.verdict == Verdict::Unsat);
    CHECK_FALSE(res.witness.has_value());
}

TEST_CASE("feasible: a > b is a precondition error") {
    auto pm = ramp_product();
    CHECK_THROWS_AS(feasible(pm, 2.0, 1.0, builtin_settings(), ramp_sim()), Error);
}

TEST_CASE("refine_corner: low side of the interval-start ramp") {
    auto pm = ramp_product("ramp_band.ha");
    SimSettings sim = ramp_sim();
    RefineSettings rs = builtin_settings();
    auto range = initial_feature_range(pm, sim);
    REQUIRE_FALSE(range.empty);

    auto res = refine_corner(pm, range, Side::Low, rs, sim);
    CHECK(res.converged);
    CHECK(res.value == doctest::Approx(1.5).epsilon(0.01));
    REQUIRE(res.witness_value.has_value());
    CHECK(*res.witness_value >= res.value - 1e-9);
    CHECK(*res.witness_value <= res.value + rs.eps + 1e-9);
    // The witness starts near the high end of the initial band.
    REQUIRE(res.witness.has_value());
    int x_idx = res.witness->var_index("x");
    CHECK(res.witness->steps.front().samples.front().values[x_idx] >=
          0.5 - 0.05);
}

TEST_CASE("refine_corner: degenerate range returns immediately") {
    auto pm = ramp_product();
    FeatureRange r{2.0, 2.0, false};
    auto res = refine_corner(pm, r, Side::Low, builtin_settings(), ramp_sim());
    CHECK(res.calls == 0);
    CHECK(res.value == 2.0);
    CHECK(res.converged);
}

TEST_CASE("refine_corner: width equal to eps takes at most one call") {
    auto pm = ramp_product();
    RefineSettings rs = builtin_settings();
    FeatureRange r{1.995, 1.995 + rs.eps, false};
    auto res = refine_corner(pm, r, Side::Low, rs, ramp_sim());
    CHECK(res.calls <= 1);
}

TEST_CASE("refine_range: both corners with distinct witnesses") {
    auto pm = ramp_product("ramp_band.ha");
    SimSettings sim = ramp_sim();
    RefineSettings rs = builtin_settings();
    auto range = initial_feature_range(pm, sim);
    auto rr = refine_range(pm, range, rs, sim);
    CHECK_FALSE(rr.failed);
    CHECK(rr.lo_star == doctest::Approx(1.5).epsilon(0.02));
    CHECK(rr.hi_star == doctest::Approx(2.0).epsilon(0.02));
    // Containment in the initial range.
    CHECK(rr.lo_star >= range.lo - 1e-12);
    CHECK(rr.hi_star <= range.hi + 1e-12);
    REQUIRE(rr.lo_witness.has_value());
    REQUIRE(rr.hi_witness.has_value());
    CHECK(*rr.lo_witness_value < *rr.hi_witness_value);
    CHECK(rr.iterations >= 2);
}

TEST_CASE("refine_range: zero budget yields the initial range, iterations recorded") {
    auto pm = ramp_product("ramp_band.ha");
    SimSettings sim = ramp_sim();
    RefineSettings rs = builtin_settings();
    rs.sample_budget = 0;
    auto range = initial_feature_range(pm, sim);
    auto rr = refine_range(pm, range, rs, sim);
    CHECK(rr.failed);
    CHECK(rr.lo_star == range.lo);
    CHECK(rr.hi_star == range.hi);
    CHECK(rr.iterations >= 2);
}

TEST_CASE("bisection cost stays within the budget bound") {
    auto pm = ramp_product("ramp_band.ha");
    SimSettings sim = ramp_sim();
    RefineSettings rs = builtin_settings();
    rs.eps = 0.003;
    auto range = initial_feature_range(pm, sim);
    auto lo = refine_corner(pm, range, Side::Low, rs, sim);
    auto hi = refine_corner(pm, range, Side::High, rs, sim);
    int bound = static_cast<int>(std::ceil(std::log2(range.width() / rs.eps))) + 2;
    CHECK(lo.calls <= bound);
    CHECK(hi.calls <= bound);
}

// ---------------------------------------------------------------------------
// .drh emission
// ---------------------------------------------------------------------------

TEST_CASE("ramp product emits two mode blocks and a feat goal") {
    auto pm = ramp_product();
    std::string drh = emit_drh(pm, 1.9, 2.1, ramp_sim());
    CHECK(pm.automaton.locations.size() == 2);
    size_t blocks = 0, pos = 0;
    while ((pos = drh.find("{ mode ", pos)) != std::string::npos) {
        ++blocks;
        pos += 7;
    }
    CHECK(blocks == 2);
    CHECK(drh.find("goal:") != std::string::npos);
    CHECK(drh.find("(feat >= 1.9)") != std::string::npos);
    CHECK(drh.find("(feat <= 2.1)") != std::string::npos);
    auto diags = check_drh(drh);
    for (const auto& d : diags) MESSAGE(d.line, ":", d.column, " ", d.message);
    CHECK(diags.empty());
}

TEST_CASE("registers keep zero flow in every emitted mode") {
    auto pm = ramp_product();
    std::string drh = emit_drh(pm, 1.9, 2.1, ramp_sim());
    size_t count = 0, pos = 0;
    while ((pos = drh.find("d/dt[feat] = 0", pos)) != std::string::npos) {
        ++count;
        pos += 10;
    }
    CHECK(count == pm.automaton.locations.size());
}

TEST_CASE("buck product flows reproduce the folded coefficients") {
    auto ha = parse_haslac({test::model_text("buck.ha"), "buck.ha"});
    auto f = parse_feature(test::model_text("settling_time.fia"));
    auto pm = product(ha, compile_monitor(bind_feature_params(f, {{"Vr", 12.0}, {"E", 0.5}})));
    SimSettings sim;
    sim.step = 2e-7;
    sim.horizon = 2e-5;
    sim.max_jumps = 6;
    std::string drh = emit_drh(pm, 0.0, 1.0, sim);
    // a10c*i + a11c*v + b1c*Vs with a10c=1e4, a11c=-1e4, b1c=0.
    CHECK(drh.find("d/dt[v] = 10000 * i + -10000 * v") != std::string::npos);
    CHECK(check_drh(drh).empty());
}

TEST_CASE("the drh checker flags broken documents") {
    CHECK_FALSE(check_drh("nonsense").empty());
    // A jump to an undeclared mode id.
    std::string bad =
        "[0, 1] x;\n[0, 1] time;\n{ mode 1;\ninvt:\nflow:\nd/dt[x] = 1;\njump:\n(x >= 1) ==> @9 "
        "(and (x' = 0));\n}\ninit:\n@1 (x = 0);\ngoal:\n@1 (x >= 1);\n";
    bool found = false;
    for (const auto& d : check_drh(bad))
        found = found || d.message.find("unknown mode") != std::string::npos;
    CHECK(found);
}

// ---------------------------------------------------------------------------
// External solver adapter (stand-in binary)
// ---------------------------------------------------------------------------

namespace {

RefineSettings external_settings(const std::string& verdict, const std::string& workdir) {
    RefineSettings rs = builtin_settings();
    rs.oracle = OracleKind::External;
    rs.solver_path = test::fixtures_dir() + "/fake_dreach.sh";
    rs.query_dir = workdir;
    rs.solver_timeout = verdict == "hang" ? 0.5 : 30.0;
    ::setenv("FAKE_VERDICT", verdict.c_str(), 1);
    return rs;
}

}  // namespace

TEST_CASE("external oracle: SAT parses the solver trace") {
    auto pm = ramp_product();
    fs::path dir = fs::temp_directory_path() / "featkit_ext_sat";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto res = feasible(pm, 1.9, 2.1, external_settings("sat", dir.string()), ramp_sim());
    REQUIRE(res.verdict == Verdict::Sat);
    REQUIRE(res.witness.has_value());
    CHECK(res.witness->source == "solver");
    CHECK(*res.witness_value == doctest::Approx(2.0));
    // The query directory holds the emitted model.
    CHECK(fs::exists(dir / "query_1" / "model.drh"));
    std::string drh = test::slurp((dir / "query_1" / "model.drh").string());
    CHECK(check_drh(drh).empty());
}

TEST_CASE("external oracle: UNSAT exit code") {
    auto pm = ramp_product();
    fs::path dir = fs::temp_directory_path() / "featkit_ext_unsat";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto res = feasible(pm, 1.9, 2.1, external_settings("unsat", dir.string()), ramp_sim());
    CHECK(res.verdict == Verdict::Unsat);
}

TEST_CASE("external oracle: unexpected exit code is malformed output") {
    auto pm = ramp_product();
    fs::path dir = fs::temp_directory_path() / "featkit_ext_bad";
    fs::remove_all(dir);
    fs::create_directories(dir);
    try {
        feasible(pm, 1.9, 2.1, external_settings("garbage", dir.string()), ramp_sim());
        FAIL("expected an external error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::External);
        CHECK(std::string(e.what()).find("exit code") != std::string::npos);
    }
}

TEST_CASE("external oracle: timeout is reported") {
    auto pm = ramp_product();
    fs::path dir = fs::temp_directory_path() / "featkit_ext_hang";
    fs::remove_all(dir);
    fs::create_directories(dir);
    try {
        feasible(pm, 1.9, 2.1, external_settings("hang", dir.string()), ramp_sim());
        FAIL("expected a timeout");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::External);
        CHECK(std::string(e.what()).find("timeout") != std::string::npos);
    }
}

TEST_CASE("external oracle: missing solver binary") {
    auto pm = ramp_product();
    fs::path dir = fs::temp_directory_path() / "featkit_ext_missing";
    fs::remove_all(dir);
    RefineSettings rs = builtin_settings();
    rs.oracle = OracleKind::External;
    rs.solver_path = "/nonexistent/dreach";
    rs.query_dir = dir.string();
    try {
        feasible(pm, 1.9, 2.1, rs, ramp_sim());
        FAIL("expected an external error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::External);
        CHECK(std::string(e.what()).find("not found") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(dir / "query_1"));
}

TEST_CASE("hybrid oracle falls back to the solver only on UNKNOWN") {
    auto pm = ramp_product();
    fs::path dir = fs::temp_directory_path() / "featkit_hybrid";
    fs::remove_all(dir);
    fs::create_directories(dir);
    RefineSettings rs = external_settings("sat", dir.string());
    rs.oracle = OracleKind::Hybrid;
    // Builtin answers SAT here, so the fake solver must never run.
    auto res = feasible(pm, 1.9, 2.1, rs, ramp_sim());
    CHECK(res.verdict == Verdict::Sat);
    CHECK_FALSE(fs::exists(dir / "query_1"));
}
