#include "trace.hpp"

#include <sstream>

#include <json.hpp>

#include "diag.hpp"
#include "numio.hpp"

namespace featkit {

using nlohmann::json;

Trace strip_null_tuples(const Trace& tr) {
    Trace out;
    out.model = tr.model;
    out.source = tr.source;
    out.vars = tr.vars;
    out.note = tr.note;
    for (const auto& st : tr.steps) {
        if (st.is_null) continue;
        TraceStep copy = st;
        copy.index = static_cast<int>(out.steps.size());
        out.steps.push_back(std::move(copy));
    }
    if (out.steps.empty() && !tr.steps.empty()) out.note = "all steps were null";
    return out;
}

std::string write_trace_json(const Trace& tr) {
    json j;
    j["model"] = tr.model;
    j["source"] = tr.source;
    j["vars"] = tr.vars;
    if (!tr.note.empty()) j["note"] = tr.note;
    json steps = json::array();
    for (const auto& st : tr.steps) {
        json js;
        js["index"] = st.index;
        js["mode"] = st.mode;
        js["t0"] = st.t0;
        js["t1"] = st.t1;
        js["null"] = st.is_null;
        json samples = json::array();
        for (const auto& s : st.samples) {
            json jv;
            jv["t"] = s.t;
            json vals;
            for (size_t i = 0; i < tr.vars.size(); ++i) vals[tr.vars[i]] = s.values[i];
            jv["values"] = std::move(vals);
            samples.push_back(std::move(jv));
        }
        js["samples"] = std::move(samples);
        if (!st.widths.empty()) js["widths"] = st.widths;
        steps.push_back(std::move(js));
    }
    j["steps"] = std::move(steps);
    return j.dump(2) + "\n";
}

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    fail_input("trace schema violation at " + path + ": " + what);
}

double require_number(const json& j, const std::string& path) {
    if (!j.is_number()) schema_error(path, "expected a number");
    return j.get<double>();
}

std::string require_string(const json& j, const std::string& path) {
    if (!j.is_string()) schema_error(path, "expected a string");
    return j.get<std::string>();
}

}  // namespace

Trace read_trace_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail_input("trace is not valid JSON");
    if (!j.is_object()) fail_input("trace schema violation at $: expected an object");

    Trace tr;
    if (j.contains("model")) tr.model = require_string(j["model"], "model");
    if (j.contains("source")) tr.source = require_string(j["source"], "source");
    if (j.contains("note")) tr.note = require_string(j["note"], "note");
    if (!j.contains("vars") || !j["vars"].is_array())
        schema_error("vars", "expected an array of variable names");
    for (size_t i = 0; i < j["vars"].size(); ++i)
        tr.vars.push_back(require_string(j["vars"][i], "vars[" + std::to_string(i) + "]"));
    if (!j.contains("steps") || !j["steps"].is_array())
        schema_error("steps", "expected an array");

    for (size_t si = 0; si < j["steps"].size(); ++si) {
        const json& js = j["steps"][si];
        std::string path = "steps[" + std::to_string(si) + "]";
        if (!js.is_object()) schema_error(path, "expected an object");
        TraceStep st;
        if (!js.contains("index")) schema_error(path + ".index", "missing");
        st.index = static_cast<int>(require_number(js["index"], path + ".index"));
        if (!js.contains("mode")) schema_error(path + ".mode", "missing");
        st.mode = require_string(js["mode"], path + ".mode");
        if (!js.contains("t0")) schema_error(path + ".t0", "missing");
        st.t0 = require_number(js["t0"], path + ".t0");
        if (!js.contains("t1")) schema_error(path + ".t1", "missing");
        st.t1 = require_number(js["t1"], path + ".t1");
        if (js.contains("null")) {
            if (!js["null"].is_boolean()) schema_error(path + ".null", "expected a boolean");
            st.is_null = js["null"].get<bool>();
        }
        if (js.contains("samples")) {
            if (!js["samples"].is_array()) schema_error(path + ".samples", "expected an array");
            for (size_t ki = 0; ki < js["samples"].size(); ++ki) {
                const json& jv = js["samples"][ki];
                std::string spath = path + ".samples[" + std::to_string(ki) + "]";
                if (!jv.is_object()) schema_error(spath, "expected an object");
                TraceSample s;
                if (!jv.contains("t")) schema_error(spath + ".t", "missing");
                s.t = require_number(jv["t"], spath + ".t");
                if (!jv.contains("values") || !jv["values"].is_object())
                    schema_error(spath + ".values", "expected an object");
                s.values.resize(tr.vars.size(), 0.0);
                for (size_t vi = 0; vi < tr.vars.size(); ++vi) {
                    const auto& var = tr.vars[vi];
                    if (!jv["values"].contains(var))
                        schema_error(spath + ".values." + var, "missing");
                    s.values[vi] = require_number(jv["values"][var], spath + ".values." + var);
                }
                st.samples.push_back(std::move(s));
            }
        }
        if (st.is_null && !st.samples.empty())
            schema_error(path, "null step must have no samples");
        if (js.contains("widths")) {
            if (!js["widths"].is_object()) schema_error(path + ".widths", "expected an object");
            for (auto it = js["widths"].begin(); it != js["widths"].end(); ++it)
                st.widths[it.key()] = require_number(it.value(), path + ".widths." + it.key());
        }
        tr.steps.push_back(std::move(st));
    }
    return tr;
}

std::string export_csv(const Trace& tr) {
    std::ostringstream os;
    os << "time,mode";
    for (const auto& v : tr.vars) os << "," << v;
    os << "\n";
    bool any = false;
    double last_t = 0.0;
    for (const auto& st : tr.steps) {
        for (const auto& s : st.samples) {
            if (any && s.t <= last_t) continue;
            any = true;
            last_t = s.t;
            os << format_double(s.t) << "," << st.mode;
            for (double v : s.values) os << "," << format_double(v);
            os << "\n";
        }
    }
    return os.str();
}

}  // namespace featkit
