#pragma once

#include <string>

#include "refine.hpp"
#include "sim.hpp"

namespace featkit {

/// Tool-level configuration: workspace and model directories, external
/// solver wiring, and the default analysis settings. Loaded from a
/// `key = value` file (`#` comments); every key is optional.
struct ToolConfig {
    std::string workspace_dir = "workspace";
    std::string model_dir;  // empty = no extra search directory
    std::string solver_path;
    double solver_precision = 1e-3;
    int solver_sat_exit = 51;
    int solver_unsat_exit = 52;
    double solver_timeout = 60.0;

    SimSettings sim;        // step, horizon, max_jumps
    double eps = 1e-2;
    OracleKind oracle = OracleKind::Builtin;
    int sample_budget = 200;
    uint64_t seed = 1;

    std::string origin;  // file the config came from ("" = built-in defaults)
};

/// Recognized keys: workspace, models, solver, precision, step, horizon,
/// jumps, eps, oracle, sample_budget, seed, solver_sat_exit,
/// solver_unsat_exit, solver_timeout. Relative paths resolve against the
/// config file's directory. A configured models directory must exist.
ToolConfig load_config(const std::string& path);

/// Same parser over in-memory text; `base_dir` anchors relative paths.
ToolConfig parse_config(const std::string& text, const std::string& base_dir,
                        const std::string& origin);

}  // namespace featkit
