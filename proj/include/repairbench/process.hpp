#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace repairbench {

enum class Stream { Stdout, Stderr };
std::string_view to_string(Stream stream);

/// Receives child output one line at a time (without the trailing newline).
using OutputSink = std::function<void(Stream, std::string_view)>;

struct ProcessSpec {
    std::vector<std::string> argv;
    /// Added on top of the parent's environment.
    std::map<std::string, std::string> environment;
    std::filesystem::path working_directory;
};

struct TerminationInfo {
    std::optional<int> exit_code;
    std::optional<int> signal;
    bool terminated_by_watchdog = false;
    /// A member of the process group was still alive after the force-kill.
    bool orphan_survivor = false;
    double elapsed_seconds = 0;

    bool succeeded() const { return exit_code && *exit_code == 0 && !terminated_by_watchdog; }
};

/// A child running in its own process group (pgid == pid), with stdout and
/// stderr captured through pipes and stdin bound to /dev/null.
class ChildProcess {
public:
    /// Throws SPAWN_FAILED when the program cannot be started.
    static ChildProcess spawn(const ProcessSpec& spec);

    ChildProcess(ChildProcess&& other) noexcept;
    ChildProcess& operator=(ChildProcess&& other) noexcept;
    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;
    /// Force-kills the whole group if it was never waited for.
    ~ChildProcess();

    pid_t pid() const { return pid_; }

private:
    ChildProcess() = default;
    void release() noexcept;

    friend TerminationInfo enforce_budget(ChildProcess&, std::chrono::milliseconds, std::chrono::milliseconds,
                                          const OutputSink&);

    pid_t pid_ = -1;
    int out_fd_ = -1;
    int err_fd_ = -1;
    bool finished_ = false;
    std::chrono::steady_clock::time_point started_;
};

/// Pumps the child's output into `sink` until it exits or `budget` elapses.
/// On expiry the group receives SIGTERM, then SIGKILL after `grace`. The whole
/// process group is killed before returning in every case, so no descendant
/// outlives the call unless it left the group.
TerminationInfo enforce_budget(ChildProcess& process, std::chrono::milliseconds budget,
                               std::chrono::milliseconds grace, const OutputSink& sink = {});

/// spawn + enforce_budget.
TerminationInfo run_process(const ProcessSpec& spec, std::chrono::milliseconds budget,
                            std::chrono::milliseconds grace, const OutputSink& sink = {});

/// True when some non-zombie process still belongs to `pgid`.
bool process_group_alive(pid_t pgid);

}  // namespace repairbench
