#pragma once

#include <map>
#include <string>
#include <vector>

namespace featkit {

/// One sampled point. Values are aligned with Trace::vars.
struct TraceSample {
    double t = 0.0;
    std::vector<double> values;

    bool operator==(const TraceSample&) const = default;
};

/// One indexed tuple of a timed trace: a dwell in `mode` over [t0, t1] with
/// dense samples, or a NULL tuple (solver's stand-in for an urgent-location
/// visit: no samples, t0 == t1).
struct TraceStep {
    int index = 0;
    std::string mode;
    double t0 = 0.0;
    double t1 = 0.0;
    std::vector<TraceSample> samples;
    bool is_null = false;
    std::map<std::string, double> widths;  // per-variable enclosure widths (solver traces)

    bool operator==(const TraceStep&) const = default;
};

struct Trace {
    std::string model;
    std::string source = "simulation";  // "simulation" | "solver"
    std::vector<std::string> vars;
    std::vector<TraceStep> steps;
    std::string note;  // optional post-processing remark

    bool operator==(const Trace&) const = default;

    int var_index(const std::string& name) const {
        for (size_t i = 0; i < vars.size(); ++i)
            if (vars[i] == name) return static_cast<int>(i);
        return -1;
    }

    double value_at(const TraceSample& s, int var) const { return s.values[var]; }
};

/// Removes every NULL tuple and re-indexes the remaining steps 0..n-1,
/// leaving everything else untouched. Idempotent.
Trace strip_null_tuples(const Trace& tr);

/// Canonical JSON schema:
///   {"model": ..., "source": ..., "vars": [...],
///    "steps": [{"index": i, "mode": m, "t0": a, "t1": b, "null": false,
///               "samples": [{"t": ..., "values": {var: real}}],
///               "widths": {var: real}?}]}
/// read(write(tr)) == tr. The reader reports schema violations with the
/// offending field path (e.g. "steps[1].mode").
std::string write_trace_json(const Trace& tr);
Trace read_trace_json(const std::string& text);

/// Plot-ready CSV: header `time,mode,<var...>`, one row per sample with
/// strictly increasing time (at a shared boundary instant the earlier step's
/// sample wins).
std::string export_csv(const Trace& tr);

}  // namespace featkit
