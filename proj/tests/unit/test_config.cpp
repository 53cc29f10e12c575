#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "core/config.hpp"
#include "core/diag.hpp"
#include "core/haslac.hpp"
#include "core/pipeline.hpp"
#include "support/testutil.hpp"

#include <json.hpp>

using namespace featkit;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("featkit_cfg_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("empty config falls back to defaults with the builtin oracle") {
    ToolConfig cfg = parse_config("", "", "");
    CHECK(cfg.solver_path.empty());
    CHECK(cfg.oracle == OracleKind::Builtin);
    CHECK(cfg.sim.step > 0);
    CHECK(cfg.solver_precision == 1e-3);
}

TEST_CASE("a solver key enables the external tool path") {
    auto dir = scratch_dir("solver");
    std::ofstream(dir / "featkit.cfg") << "solver = /usr/local/bin/dreach\noracle = external\n";
    ToolConfig cfg = load_config((dir / "featkit.cfg").string());
    CHECK(cfg.solver_path == "/usr/local/bin/dreach");
    CHECK(cfg.oracle == OracleKind::External);
}

TEST_CASE("negative precision is rejected") {
    CHECK_THROWS_WITH_AS(parse_config("precision = -1\n", "", ""),
                         doctest::Contains("positive"), Error);
}

TEST_CASE("malformed lines carry their line number") {
    try {
        parse_config("step = 1e-3\nnot a config line\n", "", "");
        FAIL("expected rejection");
    } catch (const Error& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("relative paths resolve against the config directory") {
    auto dir = scratch_dir("relpaths");
    fs::create_directories(dir / "m");
    std::ofstream(dir / "featkit.cfg") << "workspace = ws\nmodels = m\n";
    ToolConfig cfg = load_config((dir / "featkit.cfg").string());
    CHECK(cfg.workspace_dir == (dir / "ws").lexically_normal().string());
    CHECK(cfg.model_dir == (dir / "m").lexically_normal().string());
}

TEST_CASE("a configured models directory must exist") {
    auto dir = scratch_dir("nomodels");
    std::ofstream(dir / "featkit.cfg") << "models = missing_dir\n";
    CHECK_THROWS_WITH_AS(load_config((dir / "featkit.cfg").string()),
                         doctest::Contains("does not exist"), Error);
}

TEST_CASE("unknown keys are reported") {
    CHECK_THROWS_WITH_AS(parse_config("stepsize = 1\n", "", ""),
                         doctest::Contains("unknown configuration key"), Error);
}

TEST_CASE("reports are reproducible modulo the meta block") {
    auto dir = scratch_dir("repro");
    ToolConfig cfg;
    cfg.workspace_dir = (dir / "ws").string();
    Session session(cfg);

    auto ha = parse_haslac({test::model_text("ramp.ha"), "ramp.ha"});
    auto feature = parse_feature(test::model_text("crossing.fia"));
    RunOptions opts;
    opts.bindings["TH"] = 2.0;
    opts.step = 1e-3;
    opts.horizon = 3.0;
    opts.jumps = 4;

    Report a = session.evaluate(ha, feature, opts);
    Report b = session.evaluate(ha, feature, opts);
    auto ja = nlohmann::json::parse(a.json);
    auto jb = nlohmann::json::parse(b.json);
    ja.erase("meta");
    jb.erase("meta");
    CHECK(ja == jb);
    CHECK(a.run_dir != b.run_dir);
}

TEST_CASE("each invocation writes only under its fresh run directory") {
    auto dir = scratch_dir("hygiene");
    ToolConfig cfg;
    cfg.workspace_dir = (dir / "ws").string();
    Session session(cfg);

    auto ha = parse_haslac({test::model_text("ramp_band.ha"), "ramp_band.ha"});
    auto feature = parse_feature(test::model_text("crossing.fia"));
    RunOptions opts;
    opts.bindings["TH"] = 2.0;
    opts.step = 1e-3;
    opts.horizon = 3.0;
    opts.jumps = 2;
    opts.eps = 0.05;
    opts.sample_budget = 50;

    Report rep = session.refine(ha, feature, opts);
    // Everything the run produced lives under its own run directory.
    CHECK(fs::exists(fs::path(rep.run_dir) / "report.json"));
    CHECK(fs::exists(fs::path(rep.run_dir) / "lo_witness.json"));
    CHECK(fs::exists(fs::path(rep.run_dir) / "lo_witness.csv"));
    CHECK(fs::exists(fs::path(rep.run_dir) / "hi_witness.json"));
    size_t runs = 0;
    for (const auto& entry : fs::directory_iterator(dir / "ws")) {
        CHECK(entry.is_directory());
        ++runs;
    }
    CHECK(runs == 1);
}
