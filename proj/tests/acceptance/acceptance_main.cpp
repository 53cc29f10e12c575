// Acceptance suite: every release gate in one binary, one verdict line per
// criterion. Exits nonzero when any gate fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/drh.hpp"
#include "core/flowpipe.hpp"
#include "core/haslac.hpp"
#include "core/monitor.hpp"
#include "core/refine.hpp"
#include "core/sim.hpp"
#include "core/sx.hpp"
#include "core/trace.hpp"
#include "core/trace_eval.hpp"
#include "support/corpus.hpp"

using namespace featkit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string g_cli;
std::string g_models;
std::string g_fixtures;
std::string g_work;

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct CliResult {
    int exit_code = -1;
    std::string output;
    double seconds = 0.0;
};

CliResult run_cli(const std::string& args) {
    std::string cmd = g_cli + " " + args + " 2>&1";
    auto start = std::chrono::steady_clock::now();
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("cannot spawn: " + cmd);
    CliResult res;
    char buf[4096];
    size_t got;
    while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) res.output.append(buf, got);
    int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

json report_json(const std::string& output) {
    size_t marker = output.find("-- json --\n");
    if (marker == std::string::npos)
        throw std::runtime_error("no json block in CLI output:\n" + output);
    return json::parse(output.substr(marker + 11));
}

std::string scratch_config() {
    fs::path dir = fs::path(g_work) / "cfg";
    fs::create_directories(dir);
    fs::path cfg = dir / "featkit.cfg";
    std::ofstream out(cfg);
    out << "workspace = " << (fs::path(g_work) / "ws").string() << "\n";
    return cfg.string();
}

HybridAutomaton load_model(const std::string& name) {
    return parse_haslac({slurp(g_models + "/" + name), name});
}

BoundFeature load_bound(const std::string& name, const ParamMap& bindings) {
    return bind_feature_params(parse_feature(slurp(g_models + "/" + name)), bindings);
}

// ---------------------------------------------------------------------------

Check c1_point_ramp() {
    Check c;
    std::string cfg = scratch_config();
    CliResult res = run_cli("--config " + cfg + " evaluate --model " + g_models +
                            "/ramp.ha --feature " + g_models +
                            "/crossing.fia --bind TH=2 --step 1e-3 --horizon 3 --jumps 4");
    c.require(res.exit_code == 0, "exit code " + std::to_string(res.exit_code));
    if (!c.ok) return c;
    json j = report_json(res.output);
    double lo = j["range"]["lo"], hi = j["range"]["hi"];
    c.require(lo <= 2.0 && 2.0 <= hi, "range misses 2.0");
    c.require(hi - lo <= 4e-3 + 1e-12, "width " + std::to_string(hi - lo) + " > 4e-3");
    c.require(res.seconds < 5.0, "runtime " + std::to_string(res.seconds) + "s");
    return c;
}

Check c2_band_refine() {
    Check c;
    std::string cfg = scratch_config();
    CliResult res = run_cli("--config " + cfg + " refine --model " + g_models +
                            "/ramp_band.ha --feature " + g_models +
                            "/crossing.fia --bind TH=2 --step 1e-3 --horizon 3 --jumps 4 "
                            "--eps 0.01 --oracle builtin --budget 200");
    c.require(res.exit_code == 0, "exit code " + std::to_string(res.exit_code));
    if (!c.ok) return c;
    json j = report_json(res.output);
    c.require(!j["refined"]["failed"].get<bool>(), "refinement flagged as failed");
    double lo = j["refined"]["lo"], hi = j["refined"]["hi"];
    c.require(std::abs(lo - 1.5) <= 0.02, "lo* = " + std::to_string(lo));
    c.require(std::abs(hi - 2.0) <= 0.02, "hi* = " + std::to_string(hi));

    // Witness replay: a value within eps + 2*step of each corner.
    const double tol = 0.01 + 2e-3;
    BoundFeature bf = load_bound("crossing.fia", {{"TH", 2.0}});
    std::string run_dir = j["meta"]["run_dir"];
    for (const char* side : {"lo", "hi"}) {
        std::string key = std::string(side) + "_witness";
        c.require(j["refined"].contains(key), "missing " + key);
        if (!c.ok) return c;
        Trace w = read_trace_json(
            slurp(run_dir + "/" + j["refined"][key].get<std::string>()));
        auto eval = feature_values_on_trace(w, bf);
        double corner = j["refined"][side];
        bool near = false;
        for (double v : eval.values) near = near || std::abs(v - corner) <= tol;
        c.require(near, std::string(side) + " witness does not replay near its corner");
    }
    c.require(res.seconds < 30.0, "runtime " + std::to_string(res.seconds) + "s");
    return c;
}

Check c3_exponential() {
    Check c;
    std::string cfg = scratch_config();
    CliResult res = run_cli("--config " + cfg + " evaluate --model " + g_models +
                            "/relax.ha --feature " + g_models +
                            "/rise.fia --bind TH=0.5 --step 1e-3 --horizon 2 --jumps 2");
    c.require(res.exit_code == 0, "exit code " + std::to_string(res.exit_code));
    if (!c.ok) return c;
    json j = report_json(res.output);
    double lo = j["range"]["lo"], hi = j["range"]["hi"];
    double ln2 = std::log(2.0);
    c.require(lo <= ln2 && ln2 <= hi, "range misses ln 2");
    c.require(std::abs(ln2 - 0.6931) < 1e-4, "ln 2 sanity");
    c.require(hi - lo <= 4e-3 + 1e-12, "width " + std::to_string(hi - lo) + " > 4e-3");
    return c;
}

struct CorpusScan {
    Check containment;   // criterion 4
    Check refinement;    // criterion 5
    Check agreement;     // criterion 6
    int accepted_runs = 0;
    int refined_items = 0;
};

CorpusScan scan_corpus() {
    CorpusScan out;
    auto corpus = test::make_corpus(50, 424242);
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> u01(0, 1);

    for (size_t idx = 0; idx < corpus.size(); ++idx) {
        const auto& item = corpus[idx];
        ProductModel pm = product(item.ha, compile_monitor(item.bound));
        CompiledModel cm = compile_model(pm);
        SimSettings sim{item.step, item.horizon, item.max_jumps};
        ReachSets rs = flowpipe(cm, sim);
        FeatureRange range = feature_range_of(rs, cm);
        IBox init = initial_box(cm);

        for (int run = 0; run < 100; ++run) {
            Valuation start;
            start.mode = pm.automaton.initial_location;
            for (size_t i = 0; i < cm.vars.size(); ++i)
                start.values[cm.vars[i]] = init[i].lo + u01(rng) * init[i].width();
            SimPolicy pol;
            for (int k = 0; k < pm.stage_count; ++k) {
                StagePolicy sp;
                if (u01(rng) < 0.5) sp.delay = u01(rng) * item.horizon * 0.3;
                if (u01(rng) < 0.3) sp.skip_events = static_cast<int>(u01(rng) * 2);
                pol.stages.push_back(sp);
            }
            SimResult res = simulate(cm, start, sim, pol);

            // Criterion 4: every state inside its (location, step) box.
            for (const auto& st : res.trace.steps) {
                int li = cm.loc_index(st.mode);
                for (const auto& sample : st.samples) {
                    int k = std::min(static_cast<int>(sample.t / sim.step), rs.steps);
                    if (!rs.hulls[li][k].has_value()) {
                        out.containment.require(false, "no box for a visited state (item " +
                                                           std::to_string(idx) + ")");
                        break;
                    }
                    out.containment.require(box_contains(*rs.hulls[li][k], sample.values, 1e-7),
                                            "state outside its box (item " +
                                                std::to_string(idx) + ")");
                }
            }

            // Criterion 4 second half: replayed values inside the range.
            Trace proj = project_to_model(pm, res.trace);
            auto eval = feature_values_on_trace(proj, item.bound, 4000);
            for (double v : eval.values)
                out.containment.require(range.contains(v, 1e-7),
                                        "replayed value outside the reported range (item " +
                                            std::to_string(idx) + ")");

            // Criterion 6: the product's feature value is one of the oracle's.
            if (res.accepted) {
                out.accepted_runs++;
                auto near = [&](const FeatureEval& e) {
                    for (double v : e.values)
                        if (std::abs(v - res.feat_value) <= 2 * item.step + 1e-9) return true;
                    return false;
                };
                bool found = near(eval);
                if (!found && eval.truncated)
                    found = near(feature_values_on_trace(proj, item.bound, 200000));
                out.agreement.require(found, "product value missing from the replay (item " +
                                                 std::to_string(idx) + ")");
            }
        }

        // Criterion 5: refined corners stay inside, within the call budget.
        if (!range.empty && range.width() > 0) {
            out.refined_items++;
            RefineSettings rfs;
            rfs.K = item.max_jumps;
            rfs.eps = 0.02;
            rfs.oracle = OracleKind::Builtin;
            rfs.time_horizon = item.horizon;
            rfs.sample_budget = 120;
            rfs.seed = 7 + idx;
            int bound = std::max(0, static_cast<int>(std::ceil(
                                        std::log2(range.width() / rfs.eps)))) +
                        2;
            auto lo = refine_corner(pm, range, Side::Low, rfs, sim);
            auto hi = refine_corner(pm, range, Side::High, rfs, sim);
            out.refinement.require(lo.value >= range.lo - 1e-9,
                                   "low corner escapes the range (item " + std::to_string(idx) +
                                       ")");
            out.refinement.require(hi.value <= range.hi + 1e-9,
                                   "high corner escapes the range (item " + std::to_string(idx) +
                                       ")");
            out.refinement.require(lo.value <= hi.value + 1e-9,
                                   "corners crossed (item " + std::to_string(idx) + ")");
            out.refinement.require(lo.calls <= bound && hi.calls <= bound,
                                   "oracle calls exceed the bound (item " +
                                       std::to_string(idx) + ")");
        }
    }
    out.containment.require(out.accepted_runs > 100,
                            "too few accepting runs for a meaningful check");
    out.refinement.require(out.refined_items > 20, "too few nonempty ranges");
    return out;
}

Check c7_null_fuzz() {
    Check c;
    std::mt19937_64 rng(77);
    for (int iter = 0; iter < 1000; ++iter) {
        int n = 1 + static_cast<int>(rng() % 16);
        Trace tr;
        tr.model = "fuzz";
        tr.vars = {"x"};
        double t = 0;
        for (int i = 0; i < n; ++i) {
            TraceStep st;
            st.index = i;
            st.mode = "l" + std::to_string(rng() % 3);
            if (rng() % 3 == 0) {
                st.is_null = true;
                st.t0 = st.t1 = t;
            } else {
                st.t0 = t;
                st.t1 = t + 0.5;
                st.samples.push_back({t, {static_cast<double>(i)}});
                st.samples.push_back({t + 0.5, {i + 0.25}});
                t += 0.5;
            }
            tr.steps.push_back(std::move(st));
        }
        Trace once = strip_null_tuples(tr);
        for (size_t i = 0; i < once.steps.size(); ++i) {
            c.require(!once.steps[i].is_null, "null step survived");
            c.require(once.steps[i].index == static_cast<int>(i), "indices not contiguous");
        }
        size_t j = 0;
        for (const auto& st : tr.steps) {
            if (st.is_null) continue;
            c.require(j < once.steps.size() && once.steps[j].mode == st.mode &&
                          once.steps[j].samples == st.samples,
                      "order or content not preserved");
            ++j;
        }
        c.require(j == once.steps.size(), "step count mismatch");
        c.require(strip_null_tuples(once) == once, "strip is not idempotent");
        if (!c.ok) return c;
    }
    return c;
}

Check c8_round_trips() {
    Check c;
    // HASLAC print -> parse fixpoint over the corpus.
    auto corpus = test::make_corpus(50, 424242);
    for (const auto& item : corpus) {
        std::string first = print_haslac(item.ha);
        HybridAutomaton again = parse_haslac({first, "corpus"});
        c.require(again == item.ha, "print->parse changed the automaton");
        c.require(print_haslac(again) == first, "second print differs");
        if (!c.ok) return c;
    }

    // Trace JSON read -> write identity over simulated and solver traces.
    {
        auto ha = load_model("ramp_band.ha");
        BoundFeature bf = load_bound("crossing.fia", {{"TH", 2.0}});
        ProductModel pm = product(ha, compile_monitor(bf));
        SimSettings sim{1e-3, 3.0, 4};
        CompiledModel cm = compile_model(pm);
        SimResult res = simulate(cm, initial_midpoint(cm), sim);
        for (const Trace& tr :
             {res.trace, project_to_model(pm, res.trace),
              parse_solver_trace(slurp(g_fixtures + "/solver_trace_sample.json"))}) {
            Trace rt = read_trace_json(write_trace_json(tr));
            c.require(rt == tr, "trace JSON round trip is not the identity");
        }
    }

    // SX imports simulate within 1e-6 of their hand-translated twins.
    struct TwinCase {
        const char* stem;
        const char* var;
        double horizon;
    };
    for (const TwinCase& tc : {TwinCase{"sx_rampjump", "x", 5.0},
                               TwinCase{"sx_charger", "vout", 4.0},
                               TwinCase{"sx_osc", "p", 4.0}}) {
        SxDocument doc = parse_sx(slurp(g_fixtures + "/" + tc.stem + ".xml"));
        SxConfig sxc = parse_sx_config(slurp(g_fixtures + "/" + tc.stem + ".cfg"));
        HybridAutomaton imported = flatten(doc, sxc);
        HybridAutomaton twin =
            parse_haslac({slurp(g_fixtures + "/" + tc.stem + "_twin.ha"), tc.stem});

        SimSettings sim{1e-3, tc.horizon, 64};
        auto last_of = [&](const HybridAutomaton& m) {
            ProductModel pm = wrap_plain(m);
            CompiledModel cm = compile_model(pm);
            SimResult r = simulate(cm, initial_midpoint(cm), sim);
            int idx = r.trace.var_index(tc.var);
            return r.trace.steps.back().samples.back().values[idx];
        };
        double a = last_of(imported), b = last_of(twin);
        c.require(std::abs(a - b) <= 1e-6,
                  std::string(tc.stem) + ": twin disagreement " + std::to_string(a - b));
    }
    return c;
}

Check c9_drh_and_solver_absent() {
    Check c;
    auto ha = load_model("ramp.ha");
    BoundFeature bf = load_bound("crossing.fia", {{"TH", 2.0}});
    ProductModel pm = product(ha, compile_monitor(bf));
    SimSettings sim{1e-3, 3.0, 4};
    std::string drh = emit_drh(pm, 1.9, 2.1, sim);

    auto diags = check_drh(drh);
    c.require(diags.empty(), diags.empty() ? "" : "drh checker: " + diags.front().message);
    size_t blocks = 0, pos = 0;
    while ((pos = drh.find("{ mode ", pos)) != std::string::npos) {
        ++blocks;
        pos += 7;
    }
    c.require(blocks == pm.automaton.locations.size(), "mode block per location");
    c.require(drh.find("(feat >= 1.9)") != std::string::npos &&
                  drh.find("(feat <= 2.1)") != std::string::npos,
              "goal bounds on feat");

    // External oracle without a configured solver: exit code 3 and a message
    // naming the configuration key.
    std::string cfg = scratch_config();
    CliResult res = run_cli("--config " + cfg + " refine --model " + g_models +
                            "/ramp.ha --feature " + g_models +
                            "/crossing.fia --bind TH=2 --step 1e-3 --horizon 3 --jumps 4 "
                            "--oracle external");
    c.require(res.exit_code == 3, "expected exit 3, got " + std::to_string(res.exit_code));
    c.require(res.output.find("solver") != std::string::npos,
              "error message does not name the config key");
    return c;
}

Check c10_buck_smoke() {
    Check c;
    auto ha = load_model("buck.ha");
    BoundFeature bf = load_bound("settling_time.fia", {{"Vr", 12.0}, {"E", 0.5}});
    ProductModel pm = product(ha, compile_monitor(bf));
    CompiledModel cm = compile_model(pm);
    SimSettings sim{2e-7, 1.4e-3, 400};

    Valuation start;
    start.mode = "closed";
    start.values = {{"v", 0.0}, {"i", 0.0}, {"t", 0.0}};
    SimResult res = simulate(cm, start, sim);

    // First switch exactly at t = D*T with the clock reset.
    const double dt = 0.51667 * 1e-05;
    c.require(res.trace.steps.size() >= 2, "no switching at all");
    if (!c.ok) return c;
    const auto& first = res.trace.steps[0];
    c.require(first.mode.rfind("closed", 0) == 0, "run does not start closed");
    c.require(std::abs(first.t1 - dt) <= 1e-6 * (1 + dt) + 1e-11,
              "first switch at " + std::to_string(first.t1));
    int t_idx = res.trace.var_index("t");
    double t_after = 0;
    for (size_t k = 1; k < res.trace.steps.size(); ++k) {
        if (res.trace.steps[k].mode.rfind("open", 0) == 0) {
            t_after = res.trace.steps[k].samples.front().values[t_idx];
            break;
        }
    }
    c.require(std::abs(t_after) <= 1e-9, "t not reset on the switch");

    // The settling-time feature matches within the horizon, both in the
    // product and on replay.
    c.require(res.accepted, "product never reaches accept");
    auto eval = feature_values_on_trace(project_to_model(pm, res.trace), bf, 200000);
    c.require(!eval.values.empty(), "replay finds no match");
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 5) {
        std::cerr << "usage: acceptance <cli> <models_dir> <fixtures_dir> <work_dir>\n";
        return 2;
    }
    g_cli = argv[1];
    g_models = argv[2];
    g_fixtures = argv[3];
    g_work = argv[4];
    fs::create_directories(g_work);

    int failures = 0;
    auto report = [&](const std::string& name, const Check& c) {
        if (c.ok) {
            std::printf("[PASS] %s\n", name.c_str());
        } else {
            std::printf("[FAIL] %s: %s\n", name.c_str(), c.detail.c_str());
            ++failures;
        }
        std::fflush(stdout);
    };
    auto guarded = [&](const std::string& name, const std::function<Check()>& fn) {
        try {
            report(name, fn());
        } catch (const std::exception& e) {
            Check c;
            c.require(false, std::string("exception: ") + e.what());
            report(name, c);
        }
    };

    guarded("C1 analytic range, point start (ramp via CLI)", c1_point_ramp);
    guarded("C2 analytic refinement, interval start (ramp via CLI)", c2_band_refine);
    guarded("C3 exponential flow brackets ln 2", c3_exponential);

    try {
        CorpusScan scan = scan_corpus();
        report("C4 containment over 50 random automata x 100 runs", scan.containment);
        report("C5 refinement containment and call budget", scan.refinement);
        report("C6 product/replay feature-value agreement", scan.agreement);
    } catch (const std::exception& e) {
        Check c;
        c.require(false, std::string("exception: ") + e.what());
        report("C4 containment over 50 random automata x 100 runs", c);
        report("C5 refinement containment and call budget", c);
        report("C6 product/replay feature-value agreement", c);
    }

    guarded("C7 NULL-tuple stripping under fuzz", c7_null_fuzz);
    guarded("C8 round trips (HASLAC, trace JSON, SX twins)", c8_round_trips);
    guarded("C9 drh emission and absent-solver contract", c9_drh_and_solver_absent);
    guarded("C10 buck switching and settling-time smoke", c10_buck_smoke);

    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
