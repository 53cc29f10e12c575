#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "featkit/featkit.h"
#include "support/testutil.hpp"

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Session {
    fk_session* s = nullptr;
    Session() { REQUIRE(fk_session_create(nullptr, &s) == FK_OK); }
    ~Session() { fk_session_destroy(s); }
};

std::string take_string(char* text) {
    std::string out = text ? text : "";
    fk_string_free(text);
    return out;
}

}  // namespace

TEST_CASE("C API: model load, validate, reprint") {
    Session ses;
    fk_model* m = nullptr;
    std::string path = featkit::test::models_dir() + "/buck.ha";
    REQUIRE(fk_model_load_file(ses.s, path.c_str(), &m) == FK_OK);
    CHECK(std::string(fk_model_name(m)) == "buck");

    char* diags = nullptr;
    REQUIRE(fk_model_validate(ses.s, m, &diags) == FK_OK);
    CHECK(nlohmann::json::parse(take_string(diags)).empty());

    char* text = nullptr;
    REQUIRE(fk_model_to_text(ses.s, m, &text) == FK_OK);
    std::string printed = take_string(text);
    CHECK(printed.find("module buck(v,i,t)") != std::string::npos);

    fk_model* again = nullptr;
    REQUIRE(fk_model_load_text(ses.s, printed.c_str(), "printed", &again) == FK_OK);
    fk_model_destroy(again);
    fk_model_destroy(m);
}

TEST_CASE("C API: errors land on the session with an input status") {
    Session ses;
    fk_model* m = nullptr;
    CHECK(fk_model_load_file(ses.s, "/no/such/file.ha", &m) == FK_ERR_INPUT);
    CHECK(m == nullptr);
    CHECK(std::string(fk_session_last_error(ses.s)).find("cannot read") != std::string::npos);

    CHECK(fk_model_load_text(ses.s, "module broken(", "<memory>", &m) == FK_ERR_INPUT);
    CHECK(std::string(fk_session_last_error(ses.s)).find("line") != std::string::npos);
}

TEST_CASE("C API: evaluate pipeline round trip") {
    fs::path ws = fs::temp_directory_path() / "featkit_capi_ws";
    fs::remove_all(ws);
    fs::create_directories(ws);
    std::ofstream cfg_file(ws / "featkit.cfg");
    cfg_file << "workspace = runs\n";
    cfg_file.close();

    fk_session* s = nullptr;
    std::string cfg_path = (ws / "featkit.cfg").string();
    REQUIRE(fk_session_create(cfg_path.c_str(), &s) == FK_OK);

    fk_model* m = nullptr;
    std::string model_path = featkit::test::models_dir() + "/ramp.ha";
    REQUIRE(fk_model_load_file(s, model_path.c_str(), &m) == FK_OK);

    fk_feature* f = nullptr;
    std::string feature_path = featkit::test::models_dir() + "/crossing.fia";
    REQUIRE(fk_feature_load_file(s, feature_path.c_str(), &f) == FK_OK);
    CHECK(std::string(fk_feature_name(f)) == "crossingTime");
    CHECK(fk_feature_bind(s, f, "TH", 2.0) == FK_OK);
    CHECK(fk_feature_bind(s, f, "nope", 1.0) == FK_ERR_INPUT);

    fk_options* o = nullptr;
    REQUIRE(fk_options_create(s, &o) == FK_OK);
    CHECK(fk_options_set_real(s, o, "step", 1e-3) == FK_OK);
    CHECK(fk_options_set_real(s, o, "horizon", 3.0) == FK_OK);
    CHECK(fk_options_set_int(s, o, "jumps", 4) == FK_OK);
    CHECK(fk_options_set_string(s, o, "oracle", "builtin") == FK_OK);
    CHECK(fk_options_set_string(s, o, "oracle", "bogus") == FK_ERR_INPUT);

    fk_report* rep = nullptr;
    REQUIRE(fk_evaluate(s, m, f, o, &rep) == FK_OK);
    auto j = nlohmann::json::parse(std::string(fk_report_json(rep)));
    CHECK(j["range"]["empty"] == false);
    CHECK(j["range"]["lo"].get<double>() <= 2.0);
    CHECK(j["range"]["hi"].get<double>() >= 2.0);
    CHECK(std::string(fk_report_run_dir(rep)).find("runs") != std::string::npos);

    fk_report_destroy(rep);
    fk_options_destroy(o);
    fk_feature_destroy(f);
    fk_model_destroy(m);
    fk_session_destroy(s);
}

TEST_CASE("C API: trace strip and csv through the surface") {
    Session ses;
    std::string sample =
        featkit::test::slurp(featkit::test::fixtures_dir() + "/solver_trace_sample.json");
    fk_trace* tr = nullptr;
    REQUIRE(fk_trace_load_solver_text(ses.s, sample.c_str(), &tr) == FK_OK);

    fk_trace* stripped = nullptr;
    REQUIRE(fk_trace_strip(ses.s, tr, &stripped) == FK_OK);

    char* json_text = nullptr;
    REQUIRE(fk_trace_to_json(ses.s, stripped, &json_text) == FK_OK);
    auto j = nlohmann::json::parse(take_string(json_text));
    CHECK(j["steps"].size() == 2);
    CHECK(j["steps"][1]["index"] == 1);

    char* csv_text = nullptr;
    REQUIRE(fk_trace_to_csv(ses.s, stripped, &csv_text) == FK_OK);
    CHECK(take_string(csv_text).rfind("time,mode,", 0) == 0);

    fk_trace_destroy(stripped);
    fk_trace_destroy(tr);
}

TEST_CASE("C API: FEATKIT_CONFIG steers the default session") {
    fs::path dir = fs::temp_directory_path() / "featkit_env_cfg";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "env.cfg") << "workspace = env_ws\n";
    ::setenv("FEATKIT_CONFIG", (dir / "env.cfg").string().c_str(), 1);
    fk_session* s = nullptr;
    REQUIRE(fk_session_create(nullptr, &s) == FK_OK);
    ::unsetenv("FEATKIT_CONFIG");
    CHECK(fs::is_directory(dir / "env_ws"));
    fk_session_destroy(s);
}
