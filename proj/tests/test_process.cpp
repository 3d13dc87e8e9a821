#include <chrono>
#include <thread>

#include "doctest.h"
#include "repairbench/error.hpp"
#include "repairbench/process.hpp"
#include "support.hpp"

using namespace repairbench;
using namespace std::chrono_literals;

namespace {

ProcessSpec stub(std::vector<std::string> args) {
    ProcessSpec spec;
    spec.argv = {STUB_TOOL};
    spec.argv.insert(spec.argv.end(), args.begin(), args.end());
    return spec;
}

}  // namespace

TEST_CASE("natural exit within budget") {
    auto t = run_process(stub({"--behavior", "noop", "--after", "1"}), 5s, 1s);
    CHECK(t.exit_code == 0);
    CHECK_FALSE(t.terminated_by_watchdog);
    CHECK(t.succeeded());
    CHECK(t.elapsed_seconds >= 0.9);
    CHECK(t.elapsed_seconds < 4.0);
}

TEST_CASE("exit code and output lines are reported") {
    std::vector<std::pair<Stream, std::string>> lines;
    auto t = run_process(stub({"--behavior", "crash", "--code", "3", "--message", "hello"}), 5s, 1s,
                         [&](Stream s, std::string_view l) { lines.emplace_back(s, std::string(l)); });
    CHECK(t.exit_code == 3);
    CHECK_FALSE(t.signal.has_value());
    CHECK_FALSE(t.succeeded());
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == std::pair{Stream::Stdout, std::string("hello")});
    CHECK(lines[1] == std::pair{Stream::Stderr, std::string("stub: simulated crash")});
}

TEST_CASE("hanging child stops at the budget") {
    auto start = std::chrono::steady_clock::now();
    auto t = run_process(stub({"--behavior", "hang"}), 2s, 1s);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(t.terminated_by_watchdog);
    CHECK(t.signal == SIGTERM);
    CHECK(wall < 3.0);
    CHECK(wall >= 1.9);
}

TEST_CASE("ignoring the polite stop leads to a force-kill after grace") {
    auto start = std::chrono::steady_clock::now();
    auto t = run_process(stub({"--behavior", "hang", "--ignore-term"}), 2s, 1s);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(t.terminated_by_watchdog);
    CHECK(t.signal == SIGKILL);
    CHECK(wall >= 2.9);
    CHECK(wall < 3.5);
    CHECK_FALSE(t.orphan_survivor);
}

TEST_CASE("grandchildren die with the group") {
    const std::string marker = "grandchild-marker-" + std::to_string(::getpid());
    auto t = run_process(stub({"--behavior", "hang", "--spawn-grandchild", "--ignore-term", "--message", marker}), 1s,
                         500ms);
    CHECK(t.terminated_by_watchdog);
    CHECK_FALSE(t.orphan_survivor);
    CHECK(testing::processes_matching(marker).empty());
}

TEST_CASE("a child that exits early still has its group cleaned up") {
    const std::string marker = "early-exit-marker-" + std::to_string(::getpid());
    auto t = run_process(stub({"--behavior", "noop", "--spawn-grandchild", "--message", marker}), 5s, 500ms);
    CHECK(t.exit_code == 0);
    CHECK(testing::processes_matching(marker).empty());
}

TEST_CASE("spawn failures") {
    ProcessSpec spec;
    spec.argv = {"/nonexistent/program"};
    CHECK_THROWS_AS(run_process(spec, 1s, 1s), Error);
    try {
        run_process(spec, 1s, 1s);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SpawnFailed);
    }
    ProcessSpec empty;
    CHECK_THROWS_AS(run_process(empty, 1s, 1s), Error);
}

TEST_CASE("environment and working directory") {
    testing::TempDir dir;
    ProcessSpec spec;
    spec.argv = {"/bin/sh", "-c", "echo \"$RB_VALUE\"; pwd"};
    spec.environment = {{"RB_VALUE", "forty-two"}};
    spec.working_directory = dir.path();
    std::vector<std::string> out;
    auto t = run_process(spec, 5s, 1s, [&](Stream, std::string_view l) { out.emplace_back(l); });
    CHECK(t.succeeded());
    REQUIRE(out.size() == 2);
    CHECK(out[0] == "forty-two");
    CHECK(std::filesystem::equivalent(out[1], dir.path()));
}

TEST_CASE("destructor kills an unwaited child") {
    pid_t pid;
    {
        auto child = ChildProcess::spawn(stub({"--behavior", "hang"}));
        pid = child.pid();
        CHECK(process_group_alive(pid));
    }
    std::this_thread::sleep_for(100ms);
    CHECK_FALSE(process_group_alive(pid));
}
