#include "pipeline.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "diag.hpp"
#include "flowpipe.hpp"
#include "haslac.hpp"
#include "monitor.hpp"
#include "numio.hpp"
#include "refine.hpp"
#include "sim.hpp"
#include "sx.hpp"
#include "trace.hpp"
#include "trace_eval.hpp"

namespace featkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<int> run_counter{0};

std::string oracle_name(OracleKind k) {
    switch (k) {
        case OracleKind::Builtin: return "builtin";
        case OracleKind::External: return "external";
        case OracleKind::Hybrid: return "hybrid";
    }
    return "builtin";
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) fail_analysis("cannot write " + path.string());
    out << content;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    long ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start)
            .count();
    }
};

}  // namespace

Session::Session(ToolConfig cfg) : cfg_(std::move(cfg)) {
    fs::create_directories(cfg_.workspace_dir);
    if (!fs::is_directory(cfg_.workspace_dir))
        fail_input("workspace directory is not writable: " + cfg_.workspace_dir);
}

std::string Session::fresh_run_dir(const std::string& kind) {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);
    std::ostringstream os;
    os << "run-" << stamp << "-" << ::getpid() << "-" << ++run_counter << "-" << kind;
    fs::path dir = fs::path(cfg_.workspace_dir) / os.str();
    fs::create_directories(dir);
    return dir.string();
}

SimSettings Session::sim_settings(const RunOptions& opts) const {
    SimSettings s = cfg_.sim;
    if (opts.step) s.step = *opts.step;
    if (opts.horizon) s.horizon = *opts.horizon;
    if (opts.jumps) s.max_jumps = *opts.jumps;
    s.check();
    return s;
}

RefineSettings Session::refine_settings(const RunOptions& opts,
                                        const std::string& run_dir) const {
    RefineSettings rs;
    rs.K = opts.jumps ? *opts.jumps : cfg_.sim.max_jumps;
    rs.eps = opts.eps ? *opts.eps : cfg_.eps;
    rs.oracle = opts.oracle ? *opts.oracle : cfg_.oracle;
    rs.time_horizon = opts.horizon ? *opts.horizon : cfg_.sim.horizon;
    rs.sample_budget = opts.sample_budget ? *opts.sample_budget : cfg_.sample_budget;
    rs.seed = opts.seed ? *opts.seed : cfg_.seed;
    rs.solver_path = cfg_.solver_path;
    rs.precision = opts.precision ? *opts.precision : cfg_.solver_precision;
    rs.solver_sat_exit = cfg_.solver_sat_exit;
    rs.solver_unsat_exit = cfg_.solver_unsat_exit;
    rs.solver_timeout = cfg_.solver_timeout;
    rs.query_dir = run_dir + "/queries";
    rs.check();
    return rs;
}

Report Session::evaluate(const HybridAutomaton& ha, const FeatureSpec& feature,
                         const RunOptions& opts) {
    Timer timer;
    std::string run_dir = fresh_run_dir("evaluate");
    SimSettings sim = sim_settings(opts);

    ParamMap bindings(opts.bindings.begin(), opts.bindings.end());
    BoundFeature bf = bind_feature_params(feature, bindings);
    ProductModel pm = product(ha, compile_monitor(bf));
    CompiledModel cm = compile_model(pm);
    ReachSets rs = flowpipe(cm, sim);
    FeatureRange range = feature_range_of(rs, cm);

    if (!opts.reach_csv.empty()) write_file(opts.reach_csv, write_reach_csv(rs));

    json j;
    j["command"] = "evaluate";
    j["model"] = ha.name;
    j["feature"] = feature.name;
    j["bindings"] = bindings;
    j["settings"] = {{"step", sim.step},
                     {"horizon", sim.horizon},
                     {"jumps", sim.max_jumps},
                     {"oracle", oracle_name(opts.oracle ? *opts.oracle : cfg_.oracle)}};
    if (range.empty) {
        j["range"] = {{"empty", true}};
    } else {
        j["range"] = {{"empty", false}, {"lo", range.lo}, {"hi", range.hi}};
    }
    j["product"] = {{"locations", pm.automaton.locations.size()},
                    {"accept_locations", pm.accept_locations.size()},
                    {"feature_variable", pm.feat_var}};
    j["meta"] = {{"run_dir", run_dir},
                 {"elapsed_ms", timer.ms()},
                 {"config", cfg_.origin.empty() ? "<defaults>" : cfg_.origin}};

    std::ostringstream text;
    text << "evaluate " << ha.name << " / " << feature.name << "\n";
    if (range.empty)
        text << "  feature range: empty (no matching run within the horizon)\n";
    else
        text << "  feature range: [" << format_double(range.lo) << ", "
             << format_double(range.hi) << "]\n";
    text << "  step " << format_double(sim.step) << ", horizon " << format_double(sim.horizon)
         << ", jumps " << sim.max_jumps << "\n";

    Report rep;
    rep.text = text.str();
    rep.json = j.dump(2) + "\n";
    rep.run_dir = run_dir;
    write_file(fs::path(run_dir) / "report.json", rep.json);
    write_file(fs::path(run_dir) / "report.txt", rep.text);
    return rep;
}

Report Session::refine(const HybridAutomaton& ha, const FeatureSpec& feature,
                       const RunOptions& opts) {
    Timer timer;
    std::string run_dir = fresh_run_dir("refine");
    SimSettings sim = sim_settings(opts);
    RefineSettings rs = refine_settings(opts, run_dir);
    sim.max_jumps = rs.K;
    sim.horizon = rs.time_horizon;

    ParamMap bindings(opts.bindings.begin(), opts.bindings.end());
    BoundFeature bf = bind_feature_params(feature, bindings);
    ProductModel pm = product(ha, compile_monitor(bf));
    CompiledModel cm = compile_model(pm);
    ReachSets reach = flowpipe(cm, sim);
    FeatureRange range = feature_range_of(reach, cm);

    if (!opts.reach_csv.empty()) write_file(opts.reach_csv, write_reach_csv(reach));

    json j;
    j["command"] = "refine";
    j["model"] = ha.name;
    j["feature"] = feature.name;
    j["bindings"] = bindings;
    j["settings"] = {{"step", sim.step},          {"horizon", rs.time_horizon},
                     {"jumps", rs.K},             {"eps", rs.eps},
                     {"oracle", oracle_name(rs.oracle)}, {"sample_budget", rs.sample_budget},
                     {"seed", rs.seed}};

    std::ostringstream text;
    text << "refine " << ha.name << " / " << feature.name << "\n";

    if (range.empty) {
        j["range"] = {{"empty", true}};
        text << "  feature range: empty (nothing to refine)\n";
    } else {
        j["range"] = {{"empty", false}, {"lo", range.lo}, {"hi", range.hi}};
        text << "  initial range: [" << format_double(range.lo) << ", "
             << format_double(range.hi) << "]\n";

        RefinedRange rr = refine_range(pm, range, rs, sim);
        json jr;
        jr["lo"] = rr.lo_star;
        jr["hi"] = rr.hi_star;
        jr["iterations"] = rr.iterations;
        jr["failed"] = rr.failed;
        jr["lo_converged"] = rr.lo_converged;
        jr["hi_converged"] = rr.hi_converged;
        auto dump_witness = [&](const std::optional<Trace>& w,
                                const std::optional<double>& value, const char* stem) {
            if (!w) return;
            write_file(fs::path(run_dir) / (std::string(stem) + ".json"), write_trace_json(*w));
            write_file(fs::path(run_dir) / (std::string(stem) + ".csv"), export_csv(*w));
            jr[std::string(stem)] = std::string(stem) + ".json";
            if (value) jr[std::string(stem) + "_value"] = *value;
        };
        dump_witness(rr.lo_witness, rr.lo_witness_value, "lo_witness");
        dump_witness(rr.hi_witness, rr.hi_witness_value, "hi_witness");
        j["refined"] = std::move(jr);

        if (rr.failed) {
            text << "  refinement failed: no witness found anywhere in the range; the initial "
                    "range stands\n";
        } else {
            text << "  refined range: [" << format_double(rr.lo_star) << ", "
                 << format_double(rr.hi_star) << "] after " << rr.iterations
                 << " oracle calls\n";
            if (rr.lo_witness) text << "  low-corner witness:  lo_witness.json\n";
            if (rr.hi_witness) text << "  high-corner witness: hi_witness.json\n";
        }
    }
    j["meta"] = {{"run_dir", run_dir},
                 {"elapsed_ms", timer.ms()},
                 {"config", cfg_.origin.empty() ? "<defaults>" : cfg_.origin}};

    Report rep;
    rep.text = text.str();
    rep.json = j.dump(2) + "\n";
    rep.run_dir = run_dir;
    write_file(fs::path(run_dir) / "report.json", rep.json);
    write_file(fs::path(run_dir) / "report.txt", rep.text);
    return rep;
}

Report Session::import_sx(const std::string& xml_path, const std::string& sx_cfg_path,
                          const std::string& out_path) {
    Timer timer;
    std::string run_dir = fresh_run_dir("import");

    auto slurp = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) fail_input("cannot read " + path);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    };

    SxDocument doc = parse_sx(slurp(xml_path));
    SxConfig sx_cfg;
    if (!sx_cfg_path.empty()) sx_cfg = parse_sx_config(slurp(sx_cfg_path));
    HybridAutomaton ha = flatten(doc, sx_cfg);
    std::string text = print_haslac(ha);

    std::string dest = out_path.empty()
                           ? (fs::path(run_dir) / (ha.name + ".ha")).string()
                           : out_path;
    write_file(dest, text);

    json j;
    j["command"] = "import";
    j["source"] = xml_path;
    j["system"] = ha.name;
    j["destination"] = out_path.empty() ? (ha.name + ".ha") : out_path;
    j["variables"] = ha.variables;
    j["locations"] = ha.locations.size();
    j["transitions"] = ha.transitions.size();
    if (sx_cfg.time_horizon) j["time_horizon"] = *sx_cfg.time_horizon;
    j["meta"] = {{"run_dir", run_dir},
                 {"elapsed_ms", timer.ms()},
                 {"config", cfg_.origin.empty() ? "<defaults>" : cfg_.origin}};

    std::ostringstream human;
    human << "import " << xml_path << "\n  wrote " << dest << "\n";

    Report rep;
    rep.text = human.str();
    rep.json = j.dump(2) + "\n";
    rep.run_dir = run_dir;
    write_file(fs::path(run_dir) / "report.json", rep.json);
    return rep;
}

}  // namespace featkit
