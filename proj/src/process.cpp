#include "repairbench/process.hpp"

#include <dirent.h>
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/prctl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

#include "repairbench/error.hpp"

extern char** environ;

namespace repairbench {

std::string_view to_string(Stream stream) { return stream == Stream::Stdout ? "stdout" : "stderr"; }

namespace {

using Clock = std::chrono::steady_clock;

// Orphaned grandchildren are re-parented to us instead of init, which lets the
// watchdog reap them by process group.
void become_subreaper() {
    static std::once_flag once;
    std::call_once(once, [] { ::prctl(PR_SET_CHILD_SUBREAPER, 1, 0, 0, 0); });
}

std::vector<std::string> merged_environment(const std::map<std::string, std::string>& additions) {
    std::vector<std::string> env;
    for (char** e = environ; e && *e; ++e) {
        std::string_view entry(*e);
        auto eq = entry.find('=');
        if (eq != std::string_view::npos && additions.contains(std::string(entry.substr(0, eq)))) continue;
        env.emplace_back(entry);
    }
    for (const auto& [k, v] : additions) env.push_back(k + "=" + v);
    return env;
}

std::vector<char*> c_strings(std::vector<std::string>& strings) {
    std::vector<char*> out;
    out.reserve(strings.size() + 1);
    for (auto& s : strings) out.push_back(s.data());
    out.push_back(nullptr);
    return out;
}

// Splits a byte stream into lines for the sink.
class LineSplitter {
public:
    LineSplitter(Stream stream, const OutputSink& sink) : stream_(stream), sink_(sink) {}

    void feed(std::string_view bytes) {
        buffer_.append(bytes);
        std::size_t start = 0;
        for (std::size_t nl; (nl = buffer_.find('\n', start)) != std::string::npos; start = nl + 1)
            emit(std::string_view(buffer_).substr(start, nl - start));
        buffer_.erase(0, start);
    }

    void finish() {
        if (!buffer_.empty()) emit(buffer_);
        buffer_.clear();
    }

private:
    void emit(std::string_view line) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (sink_) sink_(stream_, line);
    }

    Stream stream_;
    const OutputSink& sink_;
    std::string buffer_;
};

// Reads whatever is available; closes and resets the fd on EOF.
void pump(int& fd, LineSplitter& splitter) {
    std::array<char, 8192> buf;
    for (;;) {
        ssize_t n = ::read(fd, buf.data(), buf.size());
        if (n > 0) {
            splitter.feed(std::string_view(buf.data(), static_cast<std::size_t>(n)));
            continue;
        }
        if (n < 0 && errno == EINTR) continue;
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return;
        ::close(fd);
        fd = -1;
        return;
    }
}

void poll_outputs(int& out_fd, int& err_fd, LineSplitter& out, LineSplitter& err, int timeout_ms) {
    std::array<pollfd, 2> fds{};
    nfds_t n = 0;
    if (out_fd >= 0) fds[n++] = {out_fd, POLLIN, 0};
    if (err_fd >= 0) fds[n++] = {err_fd, POLLIN, 0};
    if (n == 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(timeout_ms));
        return;
    }
    int rc = ::poll(fds.data(), n, timeout_ms);
    if (rc <= 0) return;
    for (nfds_t i = 0; i < n; ++i) {
        if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
        if (fds[i].fd == out_fd)
            pump(out_fd, out);
        else if (fds[i].fd == err_fd)
            pump(err_fd, err);
    }
}

void record_status(int status, TerminationInfo& info) {
    if (WIFEXITED(status))
        info.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        info.signal = WTERMSIG(status);
}

// Reaps group members that became our children through the subreaper.
void reap_group(pid_t pgid) {
    for (;;) {
        int status = 0;
        pid_t r = ::waitpid(-pgid, &status, WNOHANG);
        if (r <= 0) return;
    }
}

int ms_until(Clock::time_point t) {
    auto d = std::chrono::duration_cast<std::chrono::milliseconds>(t - Clock::now()).count();
    return d < 0 ? 0 : static_cast<int>(d);
}

}  // namespace

bool process_group_alive(pid_t pgid) {
    DIR* proc = ::opendir("/proc");
    if (!proc) return ::kill(-pgid, 0) == 0;
    bool alive = false;
    while (dirent* entry = ::readdir(proc)) {
        const char* name = entry->d_name;
        if (name[0] < '0' || name[0] > '9') continue;
        std::ifstream stat(std::string("/proc/") + name + "/stat");
        std::string line;
        if (!std::getline(stat, line)) continue;
        auto paren = line.rfind(')');
        if (paren == std::string::npos || paren + 2 >= line.size()) continue;
        char state = 0;
        long ppid = 0, pgrp = 0;
        if (std::sscanf(line.c_str() + paren + 2, "%c %ld %ld", &state, &ppid, &pgrp) != 3) continue;
        if (pgrp == pgid && state != 'Z' && state != 'X') {
            alive = true;
            break;
        }
    }
    ::closedir(proc);
    return alive;
}

ChildProcess ChildProcess::spawn(const ProcessSpec& spec) {
    if (spec.argv.empty()) throw Error(ErrorCode::SpawnFailed, "empty argv");
    become_subreaper();

    int out_pipe[2], err_pipe[2];
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw Error(ErrorCode::SpawnFailed, std::strerror(errno));
    if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
        int e = errno;
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        throw Error(ErrorCode::SpawnFailed, std::strerror(e));
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], 1);
    posix_spawn_file_actions_adddup2(&actions, err_pipe[1], 2);
    std::string cwd = spec.working_directory.string();
    if (!cwd.empty()) posix_spawn_file_actions_addchdir_np(&actions, cwd.c_str());

    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    sigset_t empty, defaults;
    sigemptyset(&empty);
    sigemptyset(&defaults);
    for (int sig : {SIGTERM, SIGINT, SIGPIPE, SIGHUP, SIGCHLD}) sigaddset(&defaults, sig);
    posix_spawnattr_setsigmask(&attr, &empty);
    posix_spawnattr_setsigdefault(&attr, &defaults);
    posix_spawnattr_setpgroup(&attr, 0);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP | POSIX_SPAWN_SETSIGMASK | POSIX_SPAWN_SETSIGDEF);

    std::vector<std::string> args = spec.argv;
    std::vector<std::string> env = merged_environment(spec.environment);
    auto argv = c_strings(args);
    auto envp = c_strings(env);

    pid_t pid = -1;
    bool search_path = spec.argv.front().find('/') == std::string::npos;
    int rc = search_path ? ::posix_spawnp(&pid, argv[0], &actions, &attr, argv.data(), envp.data())
                         : ::posix_spawn(&pid, argv[0], &actions, &attr, argv.data(), envp.data());
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    if (rc != 0) {
        ::close(out_pipe[0]);
        ::close(err_pipe[0]);
        throw Error(ErrorCode::SpawnFailed, spec.argv.front() + ": " + std::strerror(rc));
    }
    ::fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    ::fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    ChildProcess child;
    child.pid_ = pid;
    child.out_fd_ = out_pipe[0];
    child.err_fd_ = err_pipe[0];
    child.started_ = Clock::now();
    return child;
}

ChildProcess::ChildProcess(ChildProcess&& other) noexcept { *this = std::move(other); }

ChildProcess& ChildProcess::operator=(ChildProcess&& other) noexcept {
    if (this != &other) {
        release();
        pid_ = std::exchange(other.pid_, -1);
        out_fd_ = std::exchange(other.out_fd_, -1);
        err_fd_ = std::exchange(other.err_fd_, -1);
        finished_ = std::exchange(other.finished_, true);
        started_ = other.started_;
    }
    return *this;
}

ChildProcess::~ChildProcess() { release(); }

void ChildProcess::release() noexcept {
    if (pid_ > 0 && !finished_) {
        ::kill(-pid_, SIGKILL);
        int status = 0;
        ::waitpid(pid_, &status, 0);
        reap_group(pid_);
    }
    if (out_fd_ >= 0) ::close(out_fd_);
    if (err_fd_ >= 0) ::close(err_fd_);
    pid_ = -1;
    out_fd_ = err_fd_ = -1;
    finished_ = true;
}

TerminationInfo enforce_budget(ChildProcess& process, std::chrono::milliseconds budget,
                               std::chrono::milliseconds grace, const OutputSink& sink) {
    TerminationInfo info;
    if (process.finished_) return info;
    const pid_t pid = process.pid_;
    LineSplitter out(Stream::Stdout, sink), err(Stream::Stderr, sink);

    enum class State { Running, Terminating, Killed } state = State::Running;
    const auto deadline = process.started_ + budget;
    Clock::time_point kill_deadline{};
    bool reaped = false;

    while (!reaped) {
        auto next = state == State::Running ? deadline : kill_deadline;
        int timeout = state == State::Killed ? 20 : std::min(20, ms_until(next));
        poll_outputs(process.out_fd_, process.err_fd_, out, err, timeout);

        int status = 0;
        pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            record_status(status, info);
            reaped = true;
            break;
        }
        auto now = Clock::now();
        if (state == State::Running && now >= deadline) {
            info.terminated_by_watchdog = true;
            ::kill(-pid, SIGTERM);
            state = State::Terminating;
            kill_deadline = now + grace;
        }
        if (state == State::Terminating && Clock::now() >= kill_deadline) {
            ::kill(-pid, SIGKILL);
            state = State::Killed;
        }
    }

    // The leader is gone; nothing else in its group may outlive the attempt.
    if (process_group_alive(pid)) ::kill(-pid, SIGKILL);
    const auto settle = Clock::now() + std::chrono::milliseconds(1000);
    bool group_alive = true;
    while (Clock::now() < settle) {
        reap_group(pid);
        group_alive = process_group_alive(pid);
        poll_outputs(process.out_fd_, process.err_fd_, out, err, 10);
        if (!group_alive && process.out_fd_ < 0 && process.err_fd_ < 0) break;
        if (group_alive) ::kill(-pid, SIGKILL);
    }
    info.orphan_survivor = group_alive;
    out.finish();
    err.finish();
    info.elapsed_seconds = std::chrono::duration<double>(Clock::now() - process.started_).count();
    process.finished_ = true;
    if (process.out_fd_ >= 0) ::close(std::exchange(process.out_fd_, -1));
    if (process.err_fd_ >= 0) ::close(std::exchange(process.err_fd_, -1));
    return info;
}

TerminationInfo run_process(const ProcessSpec& spec, std::chrono::milliseconds budget,
                            std::chrono::milliseconds grace, const OutputSink& sink) {
    ChildProcess child = ChildProcess::spawn(spec);
    return enforce_budget(child, budget, grace, sink);
}

}  // namespace repairbench
