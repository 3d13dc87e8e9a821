#include <chrono>

#include "doctest.h"
#include "repairbench/diff.hpp"
#include "repairbench/error.hpp"
#include "repairbench/runner.hpp"
#include "support.hpp"

using namespace repairbench;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

BugCoordinate toy_bug(const std::string& id) { return *testing::toy_benchmark().find_bug(id); }

AttemptRecord attempt(const ToolDescriptor& tool, const std::string& bug, const AttemptConfig& config,
                      const fs::path& root) {
    return run_attempt(tool, testing::toy_benchmark(), toy_bug(bug), config, root);
}

double seconds(auto f) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TEST_CASE("outcome decision table") {
    struct Row {
        bool setup_failed;
        std::optional<int> code;
        std::optional<int> signal;
        bool watchdog;
        std::size_t patches;
        bool normalization_failed;
        Outcome expected;
    };
    std::vector<Row> rows = {
        {true, std::nullopt, std::nullopt, false, 0, false, Outcome::Error},
        {true, 0, std::nullopt, false, 1, false, Outcome::Error},
        {false, 0, std::nullopt, false, 1, false, Outcome::Patched},
        {false, 0, std::nullopt, false, 0, false, Outcome::NoPatch},
        {false, 1, std::nullopt, false, 0, false, Outcome::Error},
        {false, std::nullopt, 11, false, 0, false, Outcome::Error},
        {false, std::nullopt, 15, true, 0, false, Outcome::Timeout},
        {false, std::nullopt, 9, true, 2, false, Outcome::Patched},
        {false, 1, std::nullopt, false, 1, false, Outcome::Patched},
        {false, 0, std::nullopt, false, 0, true, Outcome::Error},
        {false, std::nullopt, 15, true, 0, true, Outcome::Timeout},
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CAPTURE(i);
        const auto& r = rows[i];
        OutcomeInputs in{r.setup_failed, r.code, r.signal, r.watchdog, r.patches, r.normalization_failed};
        CHECK(decide_outcome(in) == r.expected);
    }
}

TEST_CASE("config validation") {
    AttemptConfig c;
    CHECK_NOTHROW(c.validate());
    c.budget = 0ms;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.patch_limit = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.grace = -1ms;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK(AttemptConfig{}.budget == 2h);
}

TEST_CASE("results.json round-trip") {
    NormalizedResult r;
    r.tool = "T";
    r.benchmark = "b";
    r.bug_id = "x";
    r.seed = 3;
    r.wall_time_seconds = 1.5;
    r.patches = {{"src/a.toy", "--- a/src/a.toy\n"}};
    auto back = result_from_json(to_json(r));
    CHECK(back.patches == r.patches);
    CHECK(to_json(back) == to_json(r));
}

TEST_CASE("attempt directory layout") {
    CHECK(attempt_directory("/r", "T", "toy", "bug_01", 0) == fs::path("/r/T/toy/bug_01/0"));
}

TEST_CASE("normalization") {
    testing::TempDir dir;
    auto ws = dir / "ws";
    testing::write_text(ws / "src" / "a.toy", "l1\nl2\nold\nl4\n");
    testing::write_text(ws / "src" / "b.toy", "keep\n");
    auto snap = take_snapshot(ws);
    auto tool = testing::fixture_tool("StubFixer");

    SUBCASE("no patches") { CHECK(normalize_output(snap, tool, ws, ws / "src").empty()); }

    SUBCASE("manifest with content") {
        Json m = {{"patches", {{{"file", "src/a.toy"}, {"content", "l1\nl2\nnew\nl4\n"}}}}};
        testing::write_text(ws / kPatchManifest, m.dump());
        auto p = normalize_output(snap, tool, ws, ws / "src");
        REQUIRE(p.size() == 1);
        CHECK(p[0].file == "src/a.toy");
        CHECK(p[0].diff == "--- a/src/a.toy\n+++ b/src/a.toy\n@@ -1,4 +1,4 @@\n l1\n l2\n-old\n+new\n l4\n");
    }

    SUBCASE("manifest with content_path") {
        testing::write_text(ws / ".repair" / "p1" / "a.toy", "l1\nl2\nnewer\nl4\n");
        Json m = {{"patches", {{{"file", "src/a.toy"}, {"content_path", ".repair/p1/a.toy"}}}}};
        testing::write_text(ws / kPatchManifest, m.dump());
        auto p = normalize_output(snap, tool, ws, ws / "src");
        REQUIRE(p.size() == 1);
        CHECK(p[0].diff.find("+newer\n") != std::string::npos);
    }

    SUBCASE("new file") {
        Json m = {{"patches", {{{"file", "src/c.toy"}, {"content", "return 1\n"}}}}};
        testing::write_text(ws / kPatchManifest, m.dump());
        auto p = normalize_output(snap, tool, ws, ws / "src");
        REQUIRE(p.size() == 1);
        CHECK(p[0].diff.find("@@ -0,0 +1 @@") != std::string::npos);
    }

    SUBCASE("in-place edits") {
        testing::write_text(ws / "src" / "a.toy", "l1\nl2\nold\nl4\nextra\n");
        testing::write_text(ws / "elsewhere.txt", "ignored\n");
        auto p = normalize_output(snap, tool, ws, ws / "src");
        REQUIRE(p.size() == 1);
        CHECK(p[0].file == "src/a.toy");
        CHECK(p[0].diff.find("+extra\n") != std::string::npos);
    }

    SUBCASE("outside the workspace") {
        Json m = {{"patches", {{{"file", "../evil.toy"}, {"content", "x\n"}}}}};
        testing::write_text(ws / kPatchManifest, m.dump());
        try {
            normalize_output(snap, tool, ws, ws / "src");
            FAIL("escaped the workspace");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnparseableToolOutput);
        }
        CHECK_FALSE(fs::exists(dir / "evil.toy"));
    }

    SUBCASE("garbage manifest") {
        testing::write_text(ws / kPatchManifest, "{{{");
        CHECK_THROWS_AS(normalize_output(snap, tool, ws, ws / "src"), Error);
        testing::write_text(ws / kPatchManifest, R"({"patches": [{"content": "x"}]})");
        CHECK_THROWS_AS(normalize_output(snap, tool, ws, ws / "src"), Error);
    }

    SUBCASE("unchanged content is not a patch") {
        Json m = {{"patches", {{{"file", "src/b.toy"}, {"content", "keep\n"}}}}};
        testing::write_text(ws / kPatchManifest, m.dump());
        CHECK(normalize_output(snap, tool, ws, ws / "src").empty());
    }
}

TEST_CASE("patched attempt") {
    testing::TempDir root;
    auto tool = testing::stub_tool("Emitter", {{"--behavior", "emit"}, {"--after", "1"}});
    auto r = attempt(tool, "bug_01", testing::quick_config(10000), root.path());
    CHECK(r.outcome == Outcome::Patched);
    CHECK(r.patch_count == 1);
    CHECK(r.exit.code == 0);
    CHECK_FALSE(r.exit.terminated_by_watchdog);
    CHECK(r.durations.repair >= 0.9);

    auto dir = root / "Emitter/toy/bug_01/0";
    CHECK(r.attempt_dir == dir);
    for (auto f : {"repair.log", "results.json", "attempt.json", "tool.stdout", "tool.stderr"})
        CHECK(fs::exists(dir / f));
    CHECK_FALSE(fs::exists(dir / "workspace"));

    auto result = result_from_json(read_json_file(dir / "results.json"));
    REQUIRE(result.patches.size() == 1);
    CHECK(result.patches[0].file == "src/program.toy");
    CHECK(result.patches[0].diff.find("+# stub patch") != std::string::npos);
    auto original = testing::read_text(testing::bugs_dir() / "bug_01" / "program.toy");
    CHECK(apply_unified_diff(original, result.patches[0].diff).has_value());

    auto back = read_attempt(dir);
    CHECK(to_json(back) == to_json(r));

    auto log = testing::read_text(dir / "repair.log");
    CHECK(log.find("| setup | runner | attempt Emitter on toy:bug_01") != std::string::npos);
    CHECK(log.find("| checkout | stdout |") != std::string::npos);
    CHECK(log.find("| repair | stdout | stub: emitted 1 patch(es)") != std::string::npos);
    CHECK(log.find("outcome PATCHED") != std::string::npos);
    CHECK(log.find("--seed 0") != std::string::npos);
    CHECK(log.find("--patch-limit 1") != std::string::npos);

    CHECK_THROWS_AS(attempt(tool, "bug_01", testing::quick_config(10000), root.path()), Error);
}

TEST_CASE("hanging tool times out") {
    testing::TempDir root;
    auto tool = testing::stub_tool("Hanger", {{"--behavior", "hang"}});
    AttemptRecord r;
    double wall = seconds([&] { r = attempt(tool, "bug_02", testing::quick_config(2000, 1000), root.path()); });
    CHECK(r.outcome == Outcome::Timeout);
    CHECK(r.exit.terminated_by_watchdog);
    CHECK(r.durations.repair < 3.0);
    CHECK(wall < 3.0 + r.durations.checkout + r.durations.compile + r.durations.info + 0.5);
    CHECK(fs::exists(root / "Hanger/toy/bug_02/0/results.json"));
}

TEST_CASE("crashing tool is an error") {
    testing::TempDir root;
    auto tool = testing::stub_tool("Crasher", {{"--behavior", "crash"}, {"--code", "1"}});
    auto r = attempt(tool, "bug_03", testing::quick_config(), root.path());
    CHECK(r.outcome == Outcome::Error);
    CHECK(r.exit.code == 1);
    CHECK(r.patch_count == 0);
    CHECK_FALSE(r.failed_phase.has_value());
    CHECK(r.diagnostic == "exit code 1");
}

TEST_CASE("clean exit without a patch") {
    testing::TempDir root;
    auto tool = testing::stub_tool("Idle", {{"--behavior", "noop"}});
    auto r = attempt(tool, "bug_03", testing::quick_config(), root.path());
    CHECK(r.outcome == Outcome::NoPatch);
    CHECK(result_from_json(read_json_file(r.result_file())).patches.empty());
}

TEST_CASE("patches outrank the exit path") {
    testing::TempDir root;
    auto failing = testing::stub_tool("EmitFail", {{"--behavior", "emit"}, {"--code", "3"}});
    auto r = attempt(failing, "bug_01", testing::quick_config(), root.path());
    CHECK(r.outcome == Outcome::Patched);
    CHECK(r.exit.code == 3);

    auto hanging = testing::stub_tool("EmitHang", {{"--behavior", "emit-hang"}});
    auto h = attempt(hanging, "bug_01", testing::quick_config(1500, 500), root.path());
    CHECK(h.outcome == Outcome::Patched);
    CHECK(h.exit.terminated_by_watchdog);
}

TEST_CASE("patch limit truncates") {
    testing::TempDir root;
    auto tool = testing::stub_tool("Many", {{"--behavior", "emit"}, {"--count", "3"}});
    auto config = testing::quick_config();
    config.patch_limit = 2;
    auto r = attempt(tool, "bug_01", config, root.path());
    CHECK(r.patch_count == 2);
    CHECK(result_from_json(read_json_file(r.result_file())).patches.size() == 2);
}

TEST_CASE("in-place edits are picked up") {
    testing::TempDir root;
    auto tool = testing::stub_tool("InPlace", {{"--behavior", "emit"}, {"--in-place", ""}});
    auto r = attempt(tool, "bug_04", testing::quick_config(), root.path());
    CHECK(r.outcome == Outcome::Patched);
}

TEST_CASE("patch outside the workspace") {
    testing::TempDir root;
    auto tool = testing::stub_tool("Escaper", {{"--behavior", "emit-outside"}});
    auto r = attempt(tool, "bug_01", testing::quick_config(), root.path());
    CHECK(r.outcome == Outcome::Error);
    CHECK(r.failed_phase == Phase::Normalize);
    CHECK(r.diagnostic.find("UNPARSEABLE_TOOL_OUTPUT") != std::string::npos);
}

TEST_CASE("setup failures") {
    testing::TempDir root;
    auto tool = testing::fixture_tool("StubFixer");

    auto broken = attempt(tool, "bug_09", testing::quick_config(), root.path());
    CHECK(broken.outcome == Outcome::Error);
    CHECK(broken.failed_phase == Phase::Compile);
    CHECK(testing::read_text(broken.log_file()).find("PARSE_ERROR") != std::string::npos);
    CHECK(fs::exists(broken.result_file()));
    CHECK_FALSE(fs::exists(broken.attempt_dir / "tool.stdout"));

    auto too_long = attempt(tool, "bug_10", testing::quick_config(), root.path());
    CHECK(too_long.outcome == Outcome::Error);
    CHECK(too_long.failed_phase == Phase::Launch);
    CHECK(testing::read_text(too_long.log_file()).find("Argument list too long") != std::string::npos);

    auto missing_exe = tool;
    missing_exe.name = "Missing";
    missing_exe.executable = {"/nonexistent/tool"};
    auto spawn = attempt(missing_exe, "bug_01", testing::quick_config(), root.path());
    CHECK(spawn.outcome == Outcome::Error);
    CHECK(spawn.failed_phase == Phase::Launch);
}

TEST_CASE("workspace can be kept") {
    testing::TempDir root;
    auto config = testing::quick_config();
    config.keep_workspace = true;
    auto r = attempt(testing::fixture_tool("StubFixer"), "bug_01", config, root.path());
    CHECK(fs::exists(r.attempt_dir / "workspace" / "src" / "program.toy"));
}

TEST_CASE("repeat attempts give identical results") {
    testing::TempDir a, b;
    auto tool = testing::fixture_tool("NaiveMutator");
    for (auto bug : {"bug_01", "bug_05", "bug_07"}) {
        CAPTURE(bug);
        auto ra = attempt(tool, bug, testing::quick_config(20000), a.path());
        auto rb = attempt(tool, bug, testing::quick_config(20000), b.path());
        auto ja = read_json_file(ra.result_file());
        auto jb = read_json_file(rb.result_file());
        ja.erase("wall_time_seconds");
        jb.erase("wall_time_seconds");
        CHECK(ja == jb);
        CHECK(ra.outcome == rb.outcome);
    }
}
