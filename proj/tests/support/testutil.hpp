#pragma once

#include <fstream>
#include <sstream>
#include <string>

namespace featkit::test {

inline std::string models_dir() {
#ifdef FEATKIT_MODELS_DIR
    return FEATKIT_MODELS_DIR;
#else
    return "models";
#endif
}

inline std::string fixtures_dir() {
#ifdef FEATKIT_FIXTURES_DIR
    return FEATKIT_FIXTURES_DIR;
#else
    return "tests/fixtures";
#endif
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::string model_text(const std::string& name) { return slurp(models_dir() + "/" + name); }

}  // namespace featkit::test
