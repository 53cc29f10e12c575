#include "config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "diag.hpp"
#include "numio.hpp"

namespace featkit {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double positive_real(const std::string& key, const std::string& value, int line) {
    double v = 0;
    if (!parse_double(value, v))
        fail_input("bad numeric value for '" + key + "': " + value, line);
    if (!(v > 0)) fail_input(key + " must be positive", line);
    return v;
}

long integer_value(const std::string& key, const std::string& value, int line) {
    double v = 0;
    if (!parse_double(value, v) || v != static_cast<long>(v))
        fail_input("bad integer value for '" + key + "': " + value, line);
    return static_cast<long>(v);
}

std::string resolve(const std::string& base_dir, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
    return (fs::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

ToolConfig parse_config(const std::string& text, const std::string& base_dir,
                        const std::string& origin) {
    ToolConfig cfg;
    cfg.origin = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            fail_input("malformed configuration line (expected key = value)", lineno);
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty())
            fail_input("malformed configuration line (empty key or value)", lineno);

        if (key == "workspace") {
            cfg.workspace_dir = resolve(base_dir, value);
        } else if (key == "models") {
            cfg.model_dir = resolve(base_dir, value);
        } else if (key == "solver") {
            cfg.solver_path = resolve(base_dir, value);
        } else if (key == "precision") {
            cfg.solver_precision = positive_real(key, value, lineno);
        } else if (key == "step") {
            cfg.sim.step = positive_real(key, value, lineno);
        } else if (key == "horizon") {
            cfg.sim.horizon = positive_real(key, value, lineno);
        } else if (key == "jumps") {
            cfg.sim.max_jumps = static_cast<int>(integer_value(key, value, lineno));
            if (cfg.sim.max_jumps < 0) fail_input("jumps must be nonnegative", lineno);
        } else if (key == "eps") {
            cfg.eps = positive_real(key, value, lineno);
        } else if (key == "oracle") {
            if (value == "builtin")
                cfg.oracle = OracleKind::Builtin;
            else if (value == "external")
                cfg.oracle = OracleKind::External;
            else if (value == "hybrid")
                cfg.oracle = OracleKind::Hybrid;
            else
                fail_input("oracle must be one of builtin, external, hybrid", lineno);
        } else if (key == "sample_budget") {
            long v = integer_value(key, value, lineno);
            if (v < 0) fail_input("sample_budget must be nonnegative", lineno);
            cfg.sample_budget = static_cast<int>(v);
        } else if (key == "seed") {
            cfg.seed = static_cast<uint64_t>(integer_value(key, value, lineno));
        } else if (key == "solver_sat_exit") {
            cfg.solver_sat_exit = static_cast<int>(integer_value(key, value, lineno));
        } else if (key == "solver_unsat_exit") {
            cfg.solver_unsat_exit = static_cast<int>(integer_value(key, value, lineno));
        } else if (key == "solver_timeout") {
            cfg.solver_timeout = positive_real(key, value, lineno);
        } else {
            fail_input("unknown configuration key '" + key + "'", lineno);
        }
    }
    if (!cfg.model_dir.empty() && !fs::is_directory(cfg.model_dir))
        fail_input("models directory does not exist: " + cfg.model_dir);
    return cfg;
}

ToolConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_input("cannot read configuration file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    std::string base = fs::path(path).parent_path().string();
    return parse_config(os.str(), base, path);
}

}  // namespace featkit
