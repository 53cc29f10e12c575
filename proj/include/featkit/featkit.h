/* featkit C API: quantitative feature evaluation over hybrid automata.
 *
 * All functions return fk_status; every other result travels through an out
 * parameter. Objects are opaque handles owned by the caller and released
 * with the matching _destroy function. Strings returned through char** are
 * released with fk_string_free. Errors leave a message on the session
 * (fk_session_last_error). A session is not thread-safe; use one per thread.
 */
#ifndef FEATKIT_H
#define FEATKIT_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fk_status {
    FK_OK = 0,
    FK_ERR_INPUT = 1,    /* bad model/feature/config/trace/arguments */
    FK_ERR_ANALYSIS = 2, /* analysis cannot proceed */
    FK_ERR_EXTERNAL = 3, /* external solver missing or misbehaving */
    FK_ERR_INTERNAL = 4
} fk_status;

typedef struct fk_session fk_session;
typedef struct fk_model fk_model;
typedef struct fk_feature fk_feature;
typedef struct fk_options fk_options;
typedef struct fk_trace fk_trace;
typedef struct fk_report fk_report;

/* --- session ----------------------------------------------------------- */

/* config_path may be NULL: the FEATKIT_CONFIG environment variable is
 * consulted, then built-in defaults. */
fk_status fk_session_create(const char* config_path, fk_session** out);
void fk_session_destroy(fk_session* s);
const char* fk_session_last_error(const fk_session* s);
const char* fk_version(void);

/* --- models (HASLAC) ---------------------------------------------------- */

fk_status fk_model_load_file(fk_session* s, const char* path, fk_model** out);
fk_status fk_model_load_text(fk_session* s, const char* text, const char* origin,
                             fk_model** out);
void fk_model_destroy(fk_model* m);
const char* fk_model_name(const fk_model* m);
/* Canonical HASLAC text. */
fk_status fk_model_to_text(fk_session* s, const fk_model* m, char** out_text);
/* JSON array of {element, message} well-formedness diagnostics. */
fk_status fk_model_validate(fk_session* s, const fk_model* m, char** out_json);

/* --- features ------------------------------------------------------------ */

fk_status fk_feature_load_file(fk_session* s, const char* path, fk_feature** out);
fk_status fk_feature_load_text(fk_session* s, const char* text, fk_feature** out);
void fk_feature_destroy(fk_feature* f);
const char* fk_feature_name(const fk_feature* f);
/* Pins one formal parameter; repeat per formal. */
fk_status fk_feature_bind(fk_session* s, fk_feature* f, const char* formal, double value);

/* --- per-run options ------------------------------------------------------ */

fk_status fk_options_create(fk_session* s, fk_options** out);
void fk_options_destroy(fk_options* o);
/* Real keys: step, horizon, eps, precision. Int keys: jumps, sample_budget,
 * seed. String keys: oracle (builtin|external|hybrid), reach_csv. */
fk_status fk_options_set_real(fk_session* s, fk_options* o, const char* key, double value);
fk_status fk_options_set_int(fk_session* s, fk_options* o, const char* key, long long value);
fk_status fk_options_set_string(fk_session* s, fk_options* o, const char* key,
                                const char* value);

/* --- pipelines ------------------------------------------------------------ */

fk_status fk_evaluate(fk_session* s, const fk_model* m, const fk_feature* f,
                      const fk_options* o, fk_report** out);
fk_status fk_refine(fk_session* s, const fk_model* m, const fk_feature* f, const fk_options* o,
                    fk_report** out);
/* sx_cfg_path and out_ha_path may be NULL. */
fk_status fk_import_sx(fk_session* s, const char* xml_path, const char* sx_cfg_path,
                       const char* out_ha_path, fk_report** out);

const char* fk_report_text(const fk_report* r);
const char* fk_report_json(const fk_report* r);
const char* fk_report_run_dir(const fk_report* r);
void fk_report_destroy(fk_report* r);

/* --- traces ---------------------------------------------------------------- */

fk_status fk_trace_load_file(fk_session* s, const char* path, fk_trace** out);
fk_status fk_trace_load_text(fk_session* s, const char* text, fk_trace** out);
/* Adapter for external solver traces (JSON with per-step enclosures). */
fk_status fk_trace_load_solver_text(fk_session* s, const char* text, fk_trace** out);
void fk_trace_destroy(fk_trace* t);
/* Removes NULL tuples and re-indexes the remaining steps from 0. */
fk_status fk_trace_strip(fk_session* s, const fk_trace* t, fk_trace** out);
fk_status fk_trace_to_json(fk_session* s, const fk_trace* t, char** out_text);
fk_status fk_trace_to_csv(fk_session* s, const fk_trace* t, char** out_text);

void fk_string_free(char* text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FEATKIT_H */
