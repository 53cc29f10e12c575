#pragma once

#include <map>
#include <optional>
#include <string>

#include "automaton.hpp"
#include "config.hpp"
#include "feature.hpp"

namespace featkit {

/// Per-invocation overrides of the configured defaults plus the feature
/// parameter bindings.
struct RunOptions {
    std::map<std::string, double> bindings;
    std::optional<double> step, horizon, eps, precision;
    std::optional<int> jumps, sample_budget;
    std::optional<OracleKind> oracle;
    std::optional<uint64_t> seed;
    std::string reach_csv;  // dump the reach sets here when nonempty
};

struct Report {
    std::string text;  // human-readable summary
    std::string json;  // machine-readable block
    std::string run_dir;
};

/// End-to-end pipelines over one configuration. Each invocation writes only
/// under a fresh run-stamped subdirectory of the workspace.
class Session {
public:
    explicit Session(ToolConfig cfg);

    /// parse -> bind -> monitor -> product -> flowpipe range.
    Report evaluate(const HybridAutomaton& ha, const FeatureSpec& feature,
                    const RunOptions& opts);

    /// evaluate, then corner refinement; witness traces land in the run
    /// directory as JSON and CSV.
    Report refine(const HybridAutomaton& ha, const FeatureSpec& feature, const RunOptions& opts);

    /// SX import -> flatten -> HASLAC emission. `out_path` empty writes
    /// <system>.ha into the run directory.
    Report import_sx(const std::string& xml_path, const std::string& sx_cfg_path,
                     const std::string& out_path);

    const ToolConfig& config() const { return cfg_; }

private:
    ToolConfig cfg_;

    std::string fresh_run_dir(const std::string& kind);
    SimSettings sim_settings(const RunOptions& opts) const;
    RefineSettings refine_settings(const RunOptions& opts, const std::string& run_dir) const;
};

}  // namespace featkit
