#include "vid2scenic/util/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

extern char** environ;

namespace vid2scenic::util {

namespace {

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

// Returns false once the pipe reached EOF.
bool drain(int fd, std::string& into) {
    char buf[4096];
    for (;;) {
        ssize_t n = ::read(fd, buf, sizeof buf);
        if (n > 0) {
            into.append(buf, static_cast<std::size_t>(n));
            continue;
        }
        if (n == 0) return false;
        if (errno == EINTR) continue;
        return errno == EAGAIN || errno == EWOULDBLOCK;
    }
}

void kill_group(pid_t pgid) {
    if (pgid > 0) ::kill(-pgid, SIGKILL);
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& opts) {
    ProcessResult result;
    if (argv.empty()) throw std::invalid_argument("empty command");

    int out_pipe[2], err_pipe[2];
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw std::runtime_error(std::strerror(errno));
    if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        throw std::runtime_error(std::strerror(errno));
    }

    // Everything the child needs is prepared before fork.
    std::vector<char*> cargv;
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    std::vector<std::string> env_store;
    for (char** e = environ; *e; ++e) {
        std::string entry(*e);
        auto eq = entry.find('=');
        if (eq != std::string::npos && opts.env.count(entry.substr(0, eq))) continue;
        env_store.push_back(std::move(entry));
    }
    for (const auto& [k, v] : opts.env) env_store.push_back(k + "=" + v);
    std::vector<char*> cenv;
    for (auto& e : env_store) cenv.push_back(e.data());
    cenv.push_back(nullptr);
    std::string cwd = opts.cwd.string();

    const pid_t parent = ::getpid();
    const auto t0 = std::chrono::steady_clock::now();
    pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
        throw std::runtime_error(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        // if we are SIGKILLed mid-call the tool goes down with us
        ::prctl(PR_SET_PDEATHSIG, SIGKILL);
        if (::getppid() != parent) ::_exit(127);
        ::signal(SIGPIPE, SIG_DFL);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
        if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) {
            const char* msg = "cannot change directory\n";
            (void)!::write(STDERR_FILENO, msg, std::strlen(msg));
            ::_exit(127);
        }
        ::execvpe(cargv[0], cargv.data(), cenv.data());
        const char* msg = std::strerror(errno);
        (void)!::write(STDERR_FILENO, "exec failed: ", 13);
        (void)!::write(STDERR_FILENO, msg, std::strlen(msg));
        (void)!::write(STDERR_FILENO, "\n", 1);
        ::_exit(127);
    }
    ::setpgid(pid, pid);  // also done in the child; whichever runs first wins
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    set_nonblocking(out_pipe[0]);
    set_nonblocking(err_pipe[0]);
    if (opts.on_start) opts.on_start(pid);

    bool out_open = true, err_open = true, exited = false;
    int status = 0;
    std::optional<std::chrono::steady_clock::time_point> exit_seen;
    for (;;) {
        if (!exited) {
            pid_t w = ::waitpid(pid, &status, WNOHANG);
            if (w == pid) {
                exited = true;
                exit_seen = std::chrono::steady_clock::now();
                kill_group(pid);
            }
        }
        if (exited && !out_open && !err_open) break;
        // A grandchild that escaped the group could hold the pipes open.
        if (exited && std::chrono::steady_clock::now() - *exit_seen > std::chrono::milliseconds(500)) break;

        if (!exited && opts.timeout && std::chrono::steady_clock::now() - t0 > *opts.timeout) {
            result.timed_out = true;
            kill_group(pid);
            ::waitpid(pid, &status, 0);
            exited = true;
            exit_seen = std::chrono::steady_clock::now();
            continue;
        }

        pollfd fds[2];
        int nfds = 0;
        if (out_open) fds[nfds++] = {out_pipe[0], POLLIN, 0};
        if (err_open) fds[nfds++] = {err_pipe[0], POLLIN, 0};
        if (nfds > 0) {
            ::poll(fds, static_cast<nfds_t>(nfds), 20);
        } else {
            ::usleep(5000);
        }
        if (out_open) out_open = drain(out_pipe[0], result.out);
        if (err_open) err_open = drain(err_pipe[0], result.err);
    }
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);

    result.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
        if (result.exit_code == 127 && result.err.rfind("exec failed:", 0) == 0) result.spawn_failed = true;
    } else if (WIFSIGNALED(status)) {
        result.term_signal = WTERMSIG(status);
    }
    return result;
}

std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> words;
    std::string cur;
    bool in_word = false;
    char quote = 0;
    for (std::size_t i = 0; i < command.size(); ++i) {
        char c = command[i];
        if (quote) {
            if (c == quote) {
                quote = 0;
            } else if (c == '\\' && quote == '"' && i + 1 < command.size()) {
                cur += command[++i];
            } else {
                cur += c;
            }
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\n') {
            if (in_word) words.push_back(std::move(cur));
            cur.clear();
            in_word = false;
            continue;
        }
        in_word = true;
        if (c == '\'' || c == '"') {
            quote = c;
        } else if (c == '\\' && i + 1 < command.size()) {
            cur += command[++i];
        } else {
            cur += c;
        }
    }
    if (quote) throw std::invalid_argument("unterminated quote in command: " + command);
    if (in_word) words.push_back(std::move(cur));
    return words;
}

std::vector<std::string> substitute(std::vector<std::string> words,
                                    const std::map<std::string, std::string>& values) {
    for (auto& w : words) {
        for (const auto& [key, value] : values) {
            const std::string ph = "{" + key + "}";
            std::size_t pos = 0;
            while ((pos = w.find(ph, pos)) != std::string::npos) {
                w.replace(pos, ph.size(), value);
                pos += value.size();
            }
        }
    }
    return words;
}

}  // namespace vid2scenic::util
