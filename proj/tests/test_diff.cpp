#include <random>

#include "doctest.h"
#include "repairbench/diff.hpp"

using namespace repairbench;

TEST_CASE("equal texts give an empty diff") {
    CHECK(unified_diff("a\nb\n", "a\nb\n", "f").empty());
}

TEST_CASE("single line replacement") {
    std::string before = "l1\nl2\nold\nl4\nl5\n";
    std::string after = "l1\nl2\nnew\nl4\nl5\n";
    auto d = unified_diff(before, after, "src/x.toy");
    CHECK(d ==
          "--- a/src/x.toy\n+++ b/src/x.toy\n@@ -1,5 +1,5 @@\n l1\n l2\n-old\n+new\n l4\n l5\n");
    CHECK(apply_unified_diff(before, d) == after);
}

TEST_CASE("context is limited to three lines and distant edits make two hunks") {
    std::string before, after;
    for (int i = 1; i <= 20; ++i) {
        before += "line" + std::to_string(i) + "\n";
        after += (i == 2 || i == 18 ? "changed" + std::to_string(i) : "line" + std::to_string(i)) + "\n";
    }
    auto d = unified_diff(before, after, "f");
    CHECK(d.find("@@ -1,5 +1,5 @@") != std::string::npos);
    CHECK(d.find("@@ -15,6 +15,6 @@") != std::string::npos);
    CHECK(apply_unified_diff(before, d) == after);
}

TEST_CASE("missing final newline") {
    auto d = unified_diff("a\nb", "a\nc", "f");
    CHECK(d.find("\\ No newline at end of file") != std::string::npos);
    CHECK(apply_unified_diff("a\nb", d) == "a\nc");
}

TEST_CASE("creation and deletion") {
    auto d = unified_diff("", "x\ny\n", "new.toy");
    CHECK(d.find("@@ -0,0 +1,2 @@") != std::string::npos);
    CHECK(apply_unified_diff("", d) == "x\ny\n");
    auto r = unified_diff("x\n", "", "old.toy");
    CHECK(apply_unified_diff("x\n", r) == "");
}

TEST_CASE("mismatched context does not apply") {
    auto d = unified_diff("a\nb\nc\n", "a\nB\nc\n", "f");
    CHECK_FALSE(apply_unified_diff("a\nx\nc\n", d).has_value());
    CHECK_FALSE(apply_unified_diff("a\nb\nc\n", "not a diff").has_value());
}

TEST_CASE("random edits round-trip") {
    std::mt19937 rng(42);
    std::uniform_int_distribution<int> len(0, 30), tok(0, 5), op(0, 3);
    for (int round = 0; round < 500; ++round) {
        std::vector<std::string> a;
        int n = len(rng);
        for (int i = 0; i < n; ++i) a.push_back("t" + std::to_string(tok(rng)));
        auto b = a;
        for (int k = op(rng); k >= 0; --k) {
            if (!b.empty() && op(rng) == 0)
                b.erase(b.begin() + static_cast<long>(rng() % b.size()));
            else
                b.insert(b.begin() + static_cast<long>(rng() % (b.size() + 1)), "n" + std::to_string(tok(rng)));
        }
        std::string sa, sb;
        for (auto& s : a) sa += s + "\n";
        for (auto& s : b) sb += s + "\n";
        auto d = unified_diff(sa, sb, "f");
        REQUIRE(apply_unified_diff(sa, d) == sb);
        if (sa == sb) CHECK(d.empty());
    }
}
