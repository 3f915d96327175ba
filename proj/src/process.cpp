#include "flor/process.hpp"

#include "flor/error.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>

extern char** environ;

namespace fs = std::filesystem;

namespace flor {

namespace {

std::vector<std::string> build_environment(const EnvOverrides& overrides) {
    std::map<std::string, std::string> vars;
    for (char** e = environ; e && *e; ++e) {
        std::string entry(*e);
        auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        vars[entry.substr(0, eq)] = entry.substr(eq + 1);
    }
    for (const auto& [k, v] : overrides) {
        if (v) {
            vars[k] = *v;
        } else {
            vars.erase(k);
        }
    }
    std::vector<std::string> out;
    out.reserve(vars.size());
    for (const auto& [k, v] : vars) out.push_back(k + "=" + v);
    return out;
}

std::vector<char*> c_strings(std::vector<std::string>& items) {
    std::vector<char*> out;
    for (auto& s : items) out.push_back(s.data());
    out.push_back(nullptr);
    return out;
}

int decode_status(int status) {
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

int wait_child(pid_t pid) {
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) throw IoError(std::string("waitpid: ") + std::strerror(errno));
    }
    return decode_status(status);
}

[[noreturn]] void child_fail(const char* what) {
    const char* msg = std::strerror(errno);
    (void)!::write(2, what, std::strlen(what));
    (void)!::write(2, ": ", 2);
    (void)!::write(2, msg, std::strlen(msg));
    (void)!::write(2, "\n", 1);
    ::_exit(127);
}

} // namespace

CaptureResult run_capture(const std::vector<std::string>& argv, const fs::path& cwd,
                          const EnvOverrides& env, const std::string& input) {
    if (argv.empty()) throw UsageError("run_capture: empty argv");
    std::vector<std::string> args = argv;
    std::vector<std::string> envs = build_environment(env);
    auto c_args = c_strings(args);
    auto c_envs = c_strings(envs);

    int out_pipe[2], err_pipe[2], in_pipe[2];
    if (::pipe2(out_pipe, O_CLOEXEC) != 0 || ::pipe2(err_pipe, O_CLOEXEC) != 0 ||
        ::pipe2(in_pipe, O_CLOEXEC) != 0) {
        throw IoError(std::string("pipe: ") + std::strerror(errno));
    }

    pid_t pid = ::fork();
    if (pid < 0) throw IoError(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        ::dup2(in_pipe[0], 0);
        ::dup2(out_pipe[1], 1);
        ::dup2(err_pipe[1], 2);
        if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) child_fail("chdir");
        environ = c_envs.data();
        ::execvp(c_args[0], c_args.data());
        child_fail(c_args[0]);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);

    if (!input.empty()) {
        std::size_t off = 0;
        while (off < input.size()) {
            ssize_t n = ::write(in_pipe[1], input.data() + off, input.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                break;
            }
            off += static_cast<std::size_t>(n);
        }
    }
    ::close(in_pipe[1]);

    CaptureResult result;
    pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
    std::string* sinks[2] = {&result.out, &result.err};
    int open_fds = 2;
    char buf[65536];
    while (open_fds > 0) {
        if (::poll(fds, 2, -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        for (int i = 0; i < 2; ++i) {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            ssize_t n = ::read(fds[i].fd, buf, sizeof(buf));
            if (n > 0) {
                sinks[i]->append(buf, static_cast<std::size_t>(n));
            } else if (n == 0 || errno != EINTR) {
                ::close(fds[i].fd);
                fds[i].fd = -1;
                --open_fds;
            }
        }
    }
    result.exit_code = wait_child(pid);
    return result;
}

int run_shell(const std::string& command, const ShellOptions& options) {
    std::vector<std::string> args = {"/bin/sh", "-c", command};
    std::vector<std::string> envs = build_environment(options.env);
    auto c_args = c_strings(args);
    auto c_envs = c_strings(envs);

    int log_fd = -1;
    if (options.output_log) {
        fs::create_directories(options.output_log->parent_path());
        log_fd = ::open(options.output_log->c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC,
                        0644);
        if (log_fd < 0) {
            throw IoError("open " + options.output_log->string() + ": " + std::strerror(errno));
        }
    }

    pid_t pid = ::fork();
    if (pid < 0) throw IoError(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        if (log_fd >= 0) {
            ::dup2(log_fd, 1);
            ::dup2(log_fd, 2);
        }
        int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, 0);
        if (!options.cwd.empty() && ::chdir(options.cwd.c_str()) != 0) child_fail("chdir");
        environ = c_envs.data();
        ::execv(c_args[0], c_args.data());
        child_fail("/bin/sh");
    }
    if (log_fd >= 0) ::close(log_fd);
    return wait_child(pid);
}

} // namespace flor
