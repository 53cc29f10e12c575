#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace featkit {

/// Broad failure classes; the C API and the CLI exit codes map onto these.
enum class ErrorKind {
    Input,      // bad model/feature/config/trace text or arguments
    Analysis,   // the analysis itself cannot proceed (unbounded set, deadlock, ...)
    External,   // an external tool is missing or misbehaved
    Internal,   // should-not-happen conditions
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, int line = 0, int column = 0)
        : std::runtime_error(message), kind_(kind), line_(line), column_(column) {}

    ErrorKind kind() const { return kind_; }
    int line() const { return line_; }
    int column() const { return column_; }

private:
    ErrorKind kind_;
    int line_;
    int column_;
};

[[noreturn]] inline void fail_input(const std::string& msg, int line = 0, int column = 0) {
    throw Error(ErrorKind::Input, msg, line, column);
}

[[noreturn]] inline void fail_analysis(const std::string& msg) {
    throw Error(ErrorKind::Analysis, msg);
}

[[noreturn]] inline void fail_external(const std::string& msg) {
    throw Error(ErrorKind::External, msg);
}

/// One well-formedness finding from validate(); `element` names the offender.
struct Diagnostic {
    std::string element;
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

/// Positioned message from the text frontends (line/column are 1-based).
struct ParseDiagnostic {
    int line = 1;
    int column = 1;
    std::string message;
};

std::string join_diagnostics(const std::vector<Diagnostic>& diags);

}  // namespace featkit
