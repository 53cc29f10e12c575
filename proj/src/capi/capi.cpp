#include "featkit/featkit.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/config.hpp"
#include "core/diag.hpp"
#include "core/feature.hpp"
#include "core/haslac.hpp"
#include "core/pipeline.hpp"
#include "core/trace.hpp"
#include "core/drh.hpp"

using namespace featkit;

// Opaque handle definitions.
struct fk_session {
    Session session;
    std::string last_error;

    explicit fk_session(ToolConfig cfg) : session(std::move(cfg)) {}
};

struct fk_model {
    HybridAutomaton ha;
};

struct fk_feature {
    FeatureSpec spec;
    std::map<std::string, double> bindings;
};

struct fk_options {
    RunOptions opts;
};

struct fk_trace {
    Trace trace;
};

struct fk_report {
    Report report;
};

namespace {

fk_status status_of(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::Input: return FK_ERR_INPUT;
        case ErrorKind::Analysis: return FK_ERR_ANALYSIS;
        case ErrorKind::External: return FK_ERR_EXTERNAL;
        case ErrorKind::Internal: return FK_ERR_INTERNAL;
    }
    return FK_ERR_INTERNAL;
}

std::string position_prefix(const Error& e) {
    if (e.line() <= 0) return "";
    std::ostringstream os;
    os << "line " << e.line();
    if (e.column() > 0) os << ":" << e.column();
    os << ": ";
    return os.str();
}

template <typename Fn>
fk_status guarded(fk_session* s, Fn&& fn) {
    if (!s) return FK_ERR_INPUT;
    try {
        fn();
        s->last_error.clear();
        return FK_OK;
    } catch (const Error& e) {
        s->last_error = position_prefix(e) + e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        s->last_error = e.what();
        return FK_ERR_INTERNAL;
    }
}

char* dup_string(const std::string& text) {
    char* out = static_cast<char*>(std::malloc(text.size() + 1));
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

std::string slurp_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_input("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

extern "C" {

const char* fk_version(void) { return "0.1.0"; }

fk_status fk_session_create(const char* config_path, fk_session** out) {
    if (!out) return FK_ERR_INPUT;
    *out = nullptr;
    try {
        ToolConfig cfg;
        std::string path;
        if (config_path && *config_path)
            path = config_path;
        else if (const char* env = std::getenv("FEATKIT_CONFIG"); env && *env)
            path = env;
        if (!path.empty()) cfg = load_config(path);
        *out = new fk_session(std::move(cfg));
        return FK_OK;
    } catch (const Error& e) {
        // No session to hang the message on; the status still tells the class.
        return status_of(e);
    } catch (...) {
        return FK_ERR_INTERNAL;
    }
}

void fk_session_destroy(fk_session* s) { delete s; }

const char* fk_session_last_error(const fk_session* s) {
    return s ? s->last_error.c_str() : "";
}

fk_status fk_model_load_text(fk_session* s, const char* text, const char* origin,
                             fk_model** out) {
    if (!out || !text) return FK_ERR_INPUT;
    *out = nullptr;
    return guarded(s, [&] {
        HaslacSource src{text, origin ? origin : "<memory>"};
        *out = new fk_model{parse_haslac(src)};
    });
}

fk_status fk_model_load_file(fk_session* s, const char* path, fk_model** out) {
    if (!out || !path) return FK_ERR_INPUT;
    *out = nullptr;
    return guarded(s, [&] {
        HaslacSource src{slurp_file(path), path};
        *out = new fk_model{parse_haslac(src)};
    });
}

void fk_model_destroy(fk_model* m) { delete m; }

const char* fk_model_name(const fk_model* m) { return m ? m->ha.name.c_str() : ""; }

fk_status fk_model_to_text(fk_session* s, const fk_model* m, char** out_text) {
    if (!m || !out_text) return FK_ERR_INPUT;
    return guarded(s, [&] { *out_text = dup_string(print_haslac(m->ha)); });
}

fk_status fk_model_validate(fk_session* s, const fk_model* m, char** out_json) {
    if (!m || !out_json) return FK_ERR_INPUT;
    return guarded(s, [&] {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& d : validate(m->ha))
            j.push_back({{"element", d.element}, {"message", d.message}});
        *out_json = dup_string(j.dump(2));
    });
}

fk_status fk_feature_load_text(fk_session* s, const char* text, fk_feature** out) {
    if (!out || !text) return FK_ERR_INPUT;
    *out = nullptr;
    return guarded(s, [&] { *out = new fk_feature{parse_feature(text), {}}; });
}

fk_status fk_feature_load_file(fk_session* s, const char* path, fk_feature** out) {
    if (!out || !path) return FK_ERR_INPUT;
    *out = nullptr;
    return guarded(s, [&] { *out = new fk_feature{parse_feature(slurp_file(path)), {}}; });
}

void fk_feature_destroy(fk_feature* f) { delete f; }

const char* fk_feature_name(const fk_feature* f) { return f ? f->spec.name.c_str() : ""; }

fk_status fk_feature_bind(fk_session* s, fk_feature* f, const char* formal, double value) {
    if (!f || !formal) return FK_ERR_INPUT;
    return guarded(s, [&] {
        bool known = false;
        for (const auto& name : f->spec.formals) known = known || name == formal;
        if (!known)
            fail_input("unknown formal '" + std::string(formal) + "' for feature " +
                       f->spec.name);
        f->bindings[formal] = value;
    });
}

fk_status fk_options_create(fk_session* s, fk_options** out) {
    if (!out) return FK_ERR_INPUT;
    return guarded(s, [&] { *out = new fk_options{}; });
}

void fk_options_destroy(fk_options* o) { delete o; }

fk_status fk_options_set_real(fk_session* s, fk_options* o, const char* key, double value) {
    if (!o || !key) return FK_ERR_INPUT;
    return guarded(s, [&] {
        std::string k = key;
        if (k == "step")
            o->opts.step = value;
        else if (k == "horizon")
            o->opts.horizon = value;
        else if (k == "eps")
            o->opts.eps = value;
        else if (k == "precision")
            o->opts.precision = value;
        else
            fail_input("unknown real option '" + k + "'");
    });
}

fk_status fk_options_set_int(fk_session* s, fk_options* o, const char* key, long long value) {
    if (!o || !key) return FK_ERR_INPUT;
    return guarded(s, [&] {
        std::string k = key;
        if (k == "jumps")
            o->opts.jumps = static_cast<int>(value);
        else if (k == "sample_budget")
            o->opts.sample_budget = static_cast<int>(value);
        else if (k == "seed")
            o->opts.seed = static_cast<uint64_t>(value);
        else
            fail_input("unknown integer option '" + k + "'");
    });
}

fk_status fk_options_set_string(fk_session* s, fk_options* o, const char* key,
                                const char* value) {
    if (!o || !key || !value) return FK_ERR_INPUT;
    return guarded(s, [&] {
        std::string k = key, v = value;
        if (k == "oracle") {
            if (v == "builtin")
                o->opts.oracle = OracleKind::Builtin;
            else if (v == "external")
                o->opts.oracle = OracleKind::External;
            else if (v == "hybrid")
                o->opts.oracle = OracleKind::Hybrid;
            else
                fail_input("oracle must be one of builtin, external, hybrid");
        } else if (k == "reach_csv") {
            o->opts.reach_csv = v;
        } else {
            fail_input("unknown string option '" + k + "'");
        }
    });
}

namespace {

RunOptions options_with_bindings(const fk_options* o, const fk_feature* f) {
    RunOptions opts = o ? o->opts : RunOptions{};
    opts.bindings = f->bindings;
    return opts;
}

}  // namespace

fk_status fk_evaluate(fk_session* s, const fk_model* m, const fk_feature* f,
                      const fk_options* o, fk_report** out) {
    if (!m || !f || !out) return FK_ERR_INPUT;
    *out = nullptr;
    return guarded(s, [&] {
        *out = new fk_report{s->session.evaluate(m->ha, f->spec, options_with_bindings(o, f))};
    });
}

fk_status fk_refine(fk_session* s, const fk_model* m, const fk_feature* f, const fk_options* o,
                    fk_report** out) {
    if (!m || !f || !out) return FK_ERR_INPUT;
    *out = nullptr;
    return guarded(s, [&] {
        *out = new fk_report{s->session.refine(m->ha, f->spec, options_with_bindings(o, f))};
    });
}

fk_status fk_import_sx(fk_session* s, const char* xml_path, const char* sx_cfg_path,
                       const char* out_ha_path, fk_report** out) {
    if (!xml_path || !out) return FK_ERR_INPUT;
    *out = nullptr;
    return guarded(s, [&] {
        *out = new fk_report{s->session.import_sx(xml_path, sx_cfg_path ? sx_cfg_path : "",
                                                  out_ha_path ? out_ha_path : "")};
    });
}

const char* fk_report_text(const fk_report* r) { return r ? r->report.text.c_str() : ""; }
const char* fk_report_json(const fk_report* r) { return r ? r->report.json.c_str() : ""; }
const char* fk_report_run_dir(const fk_report* r) { return r ? r->report.run_dir.c_str() : ""; }
void fk_report_destroy(fk_report* r) { delete r; }

fk_status fk_trace_load_text(fk_session* s, const char* text, fk_trace** out) {
    if (!text || !out) return FK_ERR_INPUT;
    *out = nullptr;
    return guarded(s, [&] { *out = new fk_trace{read_trace_json(text)}; });
}

fk_status fk_trace_load_file(fk_session* s, const char* path, fk_trace** out) {
    if (!path || !out) return FK_ERR_INPUT;
    *out = nullptr;
    return guarded(s, [&] { *out = new fk_trace{read_trace_json(slurp_file(path))}; });
}

fk_status fk_trace_load_solver_text(fk_session* s, const char* text, fk_trace** out) {
    if (!text || !out) return FK_ERR_INPUT;
    *out = nullptr;
    return guarded(s, [&] { *out = new fk_trace{parse_solver_trace(text)}; });
}

void fk_trace_destroy(fk_trace* t) { delete t; }

fk_status fk_trace_strip(fk_session* s, const fk_trace* t, fk_trace** out) {
    if (!t || !out) return FK_ERR_INPUT;
    *out = nullptr;
    return guarded(s, [&] { *out = new fk_trace{strip_null_tuples(t->trace)}; });
}

fk_status fk_trace_to_json(fk_session* s, const fk_trace* t, char** out_text) {
    if (!t || !out_text) return FK_ERR_INPUT;
    return guarded(s, [&] { *out_text = dup_string(write_trace_json(t->trace)); });
}

fk_status fk_trace_to_csv(fk_session* s, const fk_trace* t, char** out_text) {
    if (!t || !out_text) return FK_ERR_INPUT;
    return guarded(s, [&] { *out_text = dup_string(export_csv(t->trace)); });
}

void fk_string_free(char* text) { std::free(text); }

}  // extern "C"
