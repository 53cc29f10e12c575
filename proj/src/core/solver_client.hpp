#pragma once

#include <string>
#include <vector>

namespace featkit {

struct SolverInvocation {
    std::string solver_path;
    std::vector<std::string> args;
    std::string workdir;
    double timeout_seconds = 60.0;
};

struct SolverOutcome {
    int exit_code = -1;
    bool timed_out = false;
    std::string stdout_text;
    std::string stderr_text;
};

/// Runs the external solver in its own working directory, capturing output.
/// Throws Error{External} when the binary is missing or not executable; a
/// timeout kills the process and is reported in the outcome.
SolverOutcome run_solver(const SolverInvocation& inv);

}  // namespace featkit
