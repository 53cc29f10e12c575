#include "solver_client.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "diag.hpp"

namespace featkit {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

SolverOutcome run_solver(const SolverInvocation& inv) {
    if (::access(inv.solver_path.c_str(), X_OK) != 0)
        fail_external("solver not found or not executable: " + inv.solver_path);

    std::string out_path = inv.workdir + "/solver.stdout";
    std::string err_path = inv.workdir + "/solver.stderr";

    pid_t pid = ::fork();
    if (pid < 0) fail_external("could not spawn the solver process");
    if (pid == 0) {
        if (!inv.workdir.empty() && ::chdir(inv.workdir.c_str()) != 0) ::_exit(126);
        int out_fd = ::open("solver.stdout", O_CREAT | O_WRONLY | O_TRUNC, 0644);
        int err_fd = ::open("solver.stderr", O_CREAT | O_WRONLY | O_TRUNC, 0644);
        if (out_fd >= 0) ::dup2(out_fd, STDOUT_FILENO);
        if (err_fd >= 0) ::dup2(err_fd, STDERR_FILENO);

        std::vector<char*> argv;
        argv.push_back(const_cast<char*>(inv.solver_path.c_str()));
        for (const auto& a : inv.args) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        ::execv(inv.solver_path.c_str(), argv.data());
        ::_exit(127);
    }

    SolverOutcome outcome;
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(static_cast<long>(inv.timeout_seconds * 1000));
    int status = 0;
    while (true) {
        pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0) fail_external("waitpid failed for the solver process");
        if (std::chrono::steady_clock::now() > deadline) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            outcome.timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (WIFEXITED(status))
        outcome.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        outcome.exit_code = 128 + WTERMSIG(status);

    outcome.stdout_text = read_file(out_path);
    outcome.stderr_text = read_file(err_path);
    return outcome;
}

}  // namespace featkit
