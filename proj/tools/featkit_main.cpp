// Command-line front end; everything goes through the public C API.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "featkit/featkit.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitAnalysis = 2;
constexpr int kExitExternal = 3;

int exit_code_of(fk_status st) {
    switch (st) {
        case FK_OK: return kExitOk;
        case FK_ERR_INPUT: return kExitInput;
        case FK_ERR_ANALYSIS: return kExitAnalysis;
        case FK_ERR_EXTERNAL: return kExitExternal;
        case FK_ERR_INTERNAL: return kExitAnalysis;
    }
    return kExitAnalysis;
}

struct SessionHandle {
    fk_session* s = nullptr;
    ~SessionHandle() { fk_session_destroy(s); }
};

int fail_with(fk_session* s, fk_status st, const char* what) {
    const char* msg = s ? fk_session_last_error(s) : "";
    std::cerr << "error: " << what;
    if (msg && *msg) std::cerr << ": " << msg;
    std::cerr << "\n";
    return exit_code_of(st);
}

struct CommonArgs {
    std::string model_path;
    std::string feature_path;
    std::vector<std::string> bindings;
    double step = -1, horizon = -1, eps = -1, precision = -1;
    long long jumps = -1, budget = -1, seed = -1;
    std::string oracle;
    std::string reach_csv;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_refine_knobs) {
    cmd->add_option("--model", a.model_path, "model file (.ha)")->required();
    cmd->add_option("--feature", a.feature_path, "feature file (.fia)")->required();
    cmd->add_option("--bind", a.bindings, "feature parameter binding NAME=VALUE (repeatable)");
    cmd->add_option("--step", a.step, "integration step (seconds)");
    cmd->add_option("--horizon", a.horizon, "time horizon (seconds)");
    cmd->add_option("--jumps", a.jumps, "maximum transition hop count K");
    cmd->add_option("--reach-csv", a.reach_csv, "dump the reach sets to this CSV file");
    if (with_refine_knobs) {
        cmd->add_option("--eps", a.eps, "corner tolerance");
        cmd->add_option("--oracle", a.oracle, "feasibility oracle: builtin|external|hybrid");
        cmd->add_option("--budget", a.budget, "sample budget per oracle query");
        cmd->add_option("--precision", a.precision, "external solver precision (delta)");
        cmd->add_option("--seed", a.seed, "sampling seed");
    }
}

int apply_common(fk_session* s, fk_options* o, fk_feature* f, const CommonArgs& a) {
    for (const std::string& b : a.bindings) {
        size_t eq = b.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --bind expects NAME=VALUE, got '" << b << "'\n";
            return kExitInput;
        }
        std::string name = b.substr(0, eq);
        char* end = nullptr;
        double value = std::strtod(b.c_str() + eq + 1, &end);
        if (!end || *end != '\0') {
            std::cerr << "error: bad numeric value in binding '" << b << "'\n";
            return kExitInput;
        }
        if (fk_status st = fk_feature_bind(s, f, name.c_str(), value); st != FK_OK)
            return fail_with(s, st, "binding");
    }
    auto set_real = [&](const char* key, double v) -> int {
        if (v < 0) return kExitOk;
        fk_status st = fk_options_set_real(s, o, key, v);
        return st == FK_OK ? kExitOk : fail_with(s, st, key);
    };
    auto set_int = [&](const char* key, long long v) -> int {
        if (v < 0) return kExitOk;
        fk_status st = fk_options_set_int(s, o, key, v);
        return st == FK_OK ? kExitOk : fail_with(s, st, key);
    };
    if (int rc = set_real("step", a.step)) return rc;
    if (int rc = set_real("horizon", a.horizon)) return rc;
    if (int rc = set_real("eps", a.eps)) return rc;
    if (int rc = set_real("precision", a.precision)) return rc;
    if (int rc = set_int("jumps", a.jumps)) return rc;
    if (int rc = set_int("sample_budget", a.budget)) return rc;
    if (int rc = set_int("seed", a.seed)) return rc;
    if (!a.oracle.empty()) {
        if (fk_status st = fk_options_set_string(s, o, "oracle", a.oracle.c_str()); st != FK_OK)
            return fail_with(s, st, "--oracle");
    }
    if (!a.reach_csv.empty()) {
        if (fk_status st = fk_options_set_string(s, o, "reach_csv", a.reach_csv.c_str());
            st != FK_OK)
            return fail_with(s, st, "--reach-csv");
    }
    return kExitOk;
}

void print_report(const fk_report* rep) {
    std::cout << fk_report_text(rep);
    std::cout << "-- json --\n" << fk_report_json(rep);
}

int run_pipeline(const std::string& config_path, const CommonArgs& args, bool refine) {
    SessionHandle session;
    if (fk_status st = fk_session_create(config_path.empty() ? nullptr : config_path.c_str(),
                                         &session.s);
        st != FK_OK) {
        std::cerr << "error: cannot load configuration";
        if (!config_path.empty()) std::cerr << " from " << config_path;
        std::cerr << "\n";
        return exit_code_of(st);
    }

    fk_model* model = nullptr;
    if (fk_status st = fk_model_load_file(session.s, args.model_path.c_str(), &model);
        st != FK_OK)
        return fail_with(session.s, st, args.model_path.c_str());
    std::unique_ptr<fk_model, decltype(&fk_model_destroy)> model_guard(model, fk_model_destroy);

    fk_feature* feature = nullptr;
    if (fk_status st = fk_feature_load_file(session.s, args.feature_path.c_str(), &feature);
        st != FK_OK)
        return fail_with(session.s, st, args.feature_path.c_str());
    std::unique_ptr<fk_feature, decltype(&fk_feature_destroy)> feature_guard(feature,
                                                                             fk_feature_destroy);

    fk_options* opts = nullptr;
    fk_options_create(session.s, &opts);
    std::unique_ptr<fk_options, decltype(&fk_options_destroy)> opts_guard(opts,
                                                                          fk_options_destroy);
    if (int rc = apply_common(session.s, opts, feature, args)) return rc;

    fk_report* rep = nullptr;
    fk_status st = refine ? fk_refine(session.s, model, feature, opts, &rep)
                          : fk_evaluate(session.s, model, feature, opts, &rep);
    if (st != FK_OK) return fail_with(session.s, st, refine ? "refine" : "evaluate");
    print_report(rep);
    fk_report_destroy(rep);
    return kExitOk;
}

int run_trace(const std::string& in_path, const std::string& out_path, bool solver_input,
              bool strip, bool csv) {
    SessionHandle session;
    if (fk_status st = fk_session_create(nullptr, &session.s); st != FK_OK)
        return exit_code_of(st);

    std::ifstream in(in_path);
    if (!in) {
        std::cerr << "error: cannot read " << in_path << "\n";
        return kExitInput;
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    fk_trace* tr = nullptr;
    fk_status st = solver_input ? fk_trace_load_solver_text(session.s, text.c_str(), &tr)
                                : fk_trace_load_text(session.s, text.c_str(), &tr);
    if (st != FK_OK) return fail_with(session.s, st, in_path.c_str());
    std::unique_ptr<fk_trace, decltype(&fk_trace_destroy)> guard(tr, fk_trace_destroy);

    if (strip) {
        fk_trace* stripped = nullptr;
        if (fk_status rc = fk_trace_strip(session.s, tr, &stripped); rc != FK_OK)
            return fail_with(session.s, rc, "strip");
        guard.reset(stripped);
        tr = stripped;
    }

    char* out_text = nullptr;
    st = csv ? fk_trace_to_csv(session.s, tr, &out_text)
             : fk_trace_to_json(session.s, tr, &out_text);
    if (st != FK_OK) return fail_with(session.s, st, "serialize");

    if (out_path.empty()) {
        std::cout << out_text;
    } else {
        std::ofstream out(out_path);
        if (!out) {
            fk_string_free(out_text);
            std::cerr << "error: cannot write " << out_path << "\n";
            return kExitInput;
        }
        out << out_text;
    }
    fk_string_free(out_text);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantitative feature ranges over hybrid automata"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path,
                   "configuration file (falls back to $FEATKIT_CONFIG, then defaults)");

    CommonArgs eval_args, refine_args;
    CLI::App* eval_cmd =
        app.add_subcommand("evaluate", "compute the feature range by bounded reachability");
    add_common(eval_cmd, eval_args, false);
    CLI::App* refine_cmd =
        app.add_subcommand("refine", "tighten the range corners with the feasibility oracle");
    add_common(refine_cmd, refine_args, true);

    std::string import_xml, import_cfg, import_out;
    CLI::App* import_cmd = app.add_subcommand("import", "convert a SpaceEx SX model to HASLAC");
    import_cmd->add_option("--model", import_xml, "SX model file (.xml)")->required();
    import_cmd->add_option("--sx-config", import_cfg, "SpaceEx configuration file (.cfg)");
    import_cmd->add_option("--out", import_out, "destination .ha path");

    CLI::App* trace_cmd = app.add_subcommand("trace", "trace utilities");
    trace_cmd->require_subcommand(1);
    std::string strip_in, strip_out, csv_in, csv_out;
    bool strip_solver = false, csv_solver = false;
    CLI::App* strip_cmd =
        trace_cmd->add_subcommand("strip", "drop NULL tuples and re-index the steps");
    strip_cmd->add_option("--in", strip_in, "input trace JSON")->required();
    strip_cmd->add_option("--out", strip_out, "output path (stdout when absent)");
    strip_cmd->add_flag("--solver", strip_solver, "input uses the solver trace layout");
    CLI::App* csv_cmd = trace_cmd->add_subcommand("csv", "export samples as CSV");
    csv_cmd->add_option("--in", csv_in, "input trace JSON")->required();
    csv_cmd->add_option("--out", csv_out, "output path (stdout when absent)");
    csv_cmd->add_flag("--solver", csv_solver, "input uses the solver trace layout");

    CLI11_PARSE(app, argc, argv);

    if (eval_cmd->parsed()) return run_pipeline(config_path, eval_args, false);
    if (refine_cmd->parsed()) return run_pipeline(config_path, refine_args, true);
    if (import_cmd->parsed()) {
        SessionHandle session;
        if (fk_status st = fk_session_create(config_path.empty() ? nullptr : config_path.c_str(),
                                             &session.s);
            st != FK_OK) {
            std::cerr << "error: cannot load configuration\n";
            return exit_code_of(st);
        }
        fk_report* rep = nullptr;
        fk_status st = fk_import_sx(session.s, import_xml.c_str(),
                                    import_cfg.empty() ? nullptr : import_cfg.c_str(),
                                    import_out.empty() ? nullptr : import_out.c_str(), &rep);
        if (st != FK_OK) return fail_with(session.s, st, "import");
        print_report(rep);
        fk_report_destroy(rep);
        return kExitOk;
    }
    if (strip_cmd->parsed()) return run_trace(strip_in, strip_out, strip_solver, true, false);
    if (csv_cmd->parsed()) return run_trace(csv_in, csv_out, csv_solver, false, true);
    return kExitInput;
}
