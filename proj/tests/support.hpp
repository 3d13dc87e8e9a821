#pragma once

#include <dirent.h>
#include <signal.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "repairbench/benchmark.hpp"
#include "repairbench/model.hpp"
#include "repairbench/runner.hpp"
#include "repairbench/tool.hpp"

namespace testing {

namespace fs = std::filesystem;
using repairbench::Json;

/// Fresh directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "rb") {
        std::string templ = (fs::temp_directory_path() / (tag + "-XXXXXX")).string();
        if (!::mkdtemp(templ.data())) throw std::runtime_error("mkdtemp failed");
        path_ = templ;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

inline fs::path fixture_dir() { return FIXTURE_DIR; }
inline fs::path bugs_dir() { return TOY_BUGS_DIR; }
inline fs::path data_dir() { return TEST_DATA_DIR; }

inline std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

inline repairbench::BenchmarkDescriptor toy_benchmark() {
    return repairbench::load_benchmark_manifest(fixture_dir() / "benchmarks" / "toy.json");
}

inline repairbench::ToolDescriptor fixture_tool(const std::string& name) {
    return repairbench::load_tool_manifest(fixture_dir() / "tools" / (name + ".json"));
}

inline std::vector<repairbench::ToolDescriptor> fixture_tools() {
    return {fixture_tool("NaiveMutator"), fixture_tool("StubCrasher"), fixture_tool("StubFixer"),
            fixture_tool("StubHanger")};
}

/// The stub tool with canonical flags and the given behaviour flags.
inline repairbench::ToolDescriptor stub_tool(const std::string& name, std::map<std::string, std::string> extra) {
    auto tool = fixture_tool("StubFixer");
    tool.name = name;
    tool.extra_params = std::move(extra);
    return tool;
}

inline repairbench::AttemptConfig quick_config(int budget_ms = 2000, int grace_ms = 1000) {
    repairbench::AttemptConfig c;
    c.budget = std::chrono::milliseconds(budget_ms);
    c.grace = std::chrono::milliseconds(grace_ms);
    c.setup_allowance = std::chrono::seconds(30);
    return c;
}

/// Pids of live (non-zombie) processes whose command line mentions `needle`.
inline std::vector<pid_t> processes_matching(const std::string& needle) {
    std::vector<pid_t> out;
    DIR* d = ::opendir("/proc");
    if (!d) return out;
    while (auto* e = ::readdir(d)) {
        char* end = nullptr;
        long pid = std::strtol(e->d_name, &end, 10);
        if (*end || pid <= 0 || pid == ::getpid()) continue;
        fs::path base = fs::path("/proc") / e->d_name;
        auto stat = read_text(base / "stat");
        auto rp = stat.rfind(')');
        if (rp == std::string::npos || rp + 2 >= stat.size() || stat[rp + 2] == 'Z') continue;
        auto cmd = read_text(base / "cmdline");
        if (cmd.find(needle) != std::string::npos) out.push_back(static_cast<pid_t>(pid));
    }
    ::closedir(d);
    return out;
}

}  // namespace testing
