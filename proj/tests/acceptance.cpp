// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "reference_data.hpp"
#include "repairbench/analysis.hpp"
#include "repairbench/campaign.hpp"
#include "repairbench/classify.hpp"
#include "repairbench/error.hpp"
#include "repairbench/format.hpp"
#include "repairbench/runner.hpp"
#include "support.hpp"

using namespace repairbench;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// ---------------------------------------------------------------------------

void chi_square_reproduction(Verdict& v) {
    auto start = Clock::now();
    auto table = benchmark_table(reference::benchmark_sets(), reference::kSizes);
    for (const auto& row : reference::kRows) {
        auto ct = contingency(table, row.tool, "Defects4J");
        double p = chi_square_p_value(chi_square_statistic(ct));
        const auto& expected = reference::kPValues.at(row.tool);
        if (expected) {
            double rel = std::abs(p - *expected) / *expected;
            v.require(rel <= 0.02, row.tool + " p=" + std::to_string(p) + " vs " + std::to_string(*expected));
            v.detail << row.tool << " p=" << format_p_value(p) << " (rel err " << rel << "); ";
        } else {
            v.require(p < 1e-5, row.tool + " p=" + std::to_string(p) + " not < 1e-5");
        }
    }
    double t = seconds_since(start);
    v.require(t < 1.0, "runtime");
    v.detail << "runtime " << t << " s";
}

void overlap_fidelity(Verdict& v) {
    auto start = Clock::now();
    auto m = overlap_matrix(reference::overlap_sets());
    auto sets = reference::overlap_sets();
    for (const auto& row : reference::kRows)
        v.require(sets.at(row.tool).size() == row.total, row.tool + " total");
    auto a = m.at("ARJA", "GenProg-A"), b = m.at("GenProg-A", "ARJA");
    v.require(a.count == 66 && a.percentage == 45, "ARJA row, GenProg-A column");
    v.require(b.count == 66 && b.percentage == 85, "GenProg-A row, ARJA column");
    v.require(m.at("Nopol", "DynaMoth").count == 114, "Nopol/DynaMoth count");
    std::size_t asymmetric = 0;
    for (std::size_t i = 0; i < m.tools.size(); ++i)
        for (std::size_t j = 0; j < m.tools.size(); ++j)
            if (i != j && m.cells[i][j].count != m.cells[j][i].count) ++asymmetric;
    v.require(asymmetric == 0, "symmetry");
    double t = seconds_since(start);
    v.require(t < 1.0, "runtime");
    v.detail << "ARJA/GenProg-A " << a.count << " = " << a.percentage.value_or(-1) << "% and "
             << b.percentage.value_or(-1) << "%, Nopol/DynaMoth " << m.at("Nopol", "DynaMoth").count
             << ", asymmetric pairs " << asymmetric << ", runtime " << t << " s";
}

// Unique/overlapped split by direct set algebra.
std::map<std::string, Repairability> brute_force(const PatchedSets& sets) {
    std::map<std::string, Repairability> out;
    for (const auto& [tool, mine] : sets) {
        Repairability r;
        r.total = mine.size();
        for (const auto& bug : mine) {
            bool shared = false;
            for (const auto& [other, theirs] : sets)
                if (other != tool && theirs.contains(bug)) shared = true;
            (shared ? r.overlapped : r.unique)++;
        }
        out[tool] = r;
    }
    return out;
}

void accounting_identities(Verdict& v) {
    auto start = Clock::now();
    auto table = benchmark_table(reference::benchmark_sets(), reference::kSizes);
    v.require(table.tool_totals.at("ARJA") == 146, "ARJA total");
    for (const auto& row : reference::kRows) {
        std::size_t sum = 0;
        for (std::size_t b = 0; b < 5; ++b) sum += table.patched.at(row.tool).at(reference::kBenchmarks[b]);
        v.require(sum == row.total && table.tool_totals.at(row.tool) == row.total, row.tool + " row sum");
    }
    auto unique = percent_2dp(table.unique_total, table.bug_total);
    v.require(table.unique_total == 459 && table.bug_total == 2141 && unique == "21.44", "unique union");
    v.detail << "ARJA " << table.tool_totals.at("ARJA") << ", unique " << table.unique_total << "/" << table.bug_total
             << " = " << unique << "%; ";

    std::mt19937_64 rng(20240601);
    std::size_t mismatches = 0;
    const int configs = 1000;
    for (int round = 0; round < configs; ++round) {
        std::size_t tools = 1 + rng() % 8, bugs = 1 + rng() % 60;
        double density = std::uniform_real_distribution<double>(0, 0.6)(rng);
        PatchedSets sets;
        for (std::size_t t = 0; t < tools; ++t) {
            auto& s = sets["t" + std::to_string(t)];
            for (std::size_t i = 0; i < bugs; ++i)
                if (std::uniform_real_distribution<double>(0, 1)(rng) < density)
                    s.insert({"B" + std::to_string(i % 3), "", "x" + std::to_string(i)});
        }
        auto got = repairability(sets, bugs);
        auto want = brute_force(sets);
        for (const auto& [tool, r] : want) {
            const auto& g = got.rows.at(tool);
            if (!(g == r) || g.unique + g.overlapped != g.total) ++mismatches;
        }
    }
    v.require(mismatches == 0, "randomized identities");
    double t = seconds_since(start);
    v.require(t < 10.0, "runtime");
    v.detail << configs << " random configurations, " << mismatches << " mismatches, runtime " << t << " s";
}

// ---------------------------------------------------------------------------

AttemptConfig campaign_config() { return testing::quick_config(2000, 1000); }

CampaignPlan fixture_plan(const fs::path& root) {
    return plan_campaign(testing::fixture_tools(), {testing::toy_benchmark()}, {}, campaign_config(), root);
}

const std::map<Outcome, std::size_t> kExpected = {
    {Outcome::Patched, 14}, {Outcome::NoPatch, 2}, {Outcome::Error, 16}, {Outcome::Timeout, 8}};

std::map<Outcome, std::size_t> counts_of(const ResultSet& rs) {
    std::map<Outcome, std::size_t> out;
    for (const auto& r : rs.records()) ++out[r.outcome];
    return out;
}

std::string describe(const std::map<Outcome, std::size_t>& counts) {
    std::string s;
    for (const auto& [o, n] : counts) s += std::string(to_string(o)) + "=" + std::to_string(n) + " ";
    return s;
}

void end_to_end(Verdict& v, const fs::path& root) {
    auto start = Clock::now();
    ExecuteOptions options;
    options.parallelism = 4;
    auto summary = execute_campaign(fixture_plan(root), options);
    double t = seconds_since(start);
    v.require(t < 120.0, "runtime");
    v.require(summary.executed == 40 && summary.failures.empty(), "40 attempts executed");

    auto loaded = load_results(root);
    v.require(loaded.malformed.empty() && loaded.results.size() == 40, "40 records loaded");
    std::size_t missing = 0;
    for (const auto& r : loaded.results.records())
        if (!fs::exists(r.log_file()) || !fs::exists(r.result_file())) ++missing;
    v.require(missing == 0, "repair.log and results.json everywhere");
    auto counts = counts_of(loaded.results);
    v.require(counts == kExpected, "outcome counts");

    std::set<std::string> patched, no_patch;
    for (const auto& r : loaded.results.records())
        if (r.tool == "NaiveMutator") {
            if (r.outcome == Outcome::Patched) patched.insert(r.bug.bug_id);
            if (r.outcome == Outcome::NoPatch) no_patch.insert(r.bug.bug_id);
        }
    v.require(patched == std::set<std::string>{"bug_01", "bug_02", "bug_03", "bug_04", "bug_05", "bug_06"},
              "naive mutator patched set");
    v.require(no_patch == std::set<std::string>{"bug_07", "bug_08"}, "naive mutator NO_PATCH set");
    v.detail << describe(counts) << "in " << t << " s, missing files " << missing << ", naive mutator patched "
             << patched.size() << ", no-patch " << no_patch.size();
}

void timeout_enforcement(Verdict& v) {
    const std::string marker = "acceptance-hang-" + std::to_string(::getpid());
    auto bench = testing::toy_benchmark();
    auto bug = list_bugs(bench).front();
    double worst = 0;
    std::size_t not_timeout = 0, orphans = 0, slow = 0;
    const int reps = 20;
    for (int i = 0; i < reps; ++i) {
        std::map<std::string, std::string> extra = {
            {"--behavior", "hang"}, {"--spawn-grandchild", ""}, {"--message", marker}};
        // Half of them ignore SIGTERM so the force-kill path is exercised too.
        if (i % 2) extra["--ignore-term"] = "";
        auto tool = testing::stub_tool("Hang" + std::to_string(i), extra);
        testing::TempDir root;
        auto record = run_attempt(tool, bench, bug, testing::quick_config(2000, 1000), root.path());
        double t = record.durations.repair;
        worst = std::max(worst, t);
        if (t > 3.5) ++slow;
        if (record.outcome != Outcome::Timeout || !record.exit.terminated_by_watchdog) ++not_timeout;
        if (!testing::processes_matching(marker).empty()) ++orphans;
    }
    v.require(slow == 0, "termination within 3.5 s");
    v.require(not_timeout == 0, "outcome TIMEOUT");
    v.require(orphans == 0, "no orphans");
    v.detail << reps << " repetitions, worst " << worst << " s, non-TIMEOUT " << not_timeout << ", orphaned runs "
             << orphans;
}

// Everything that must match between two runs; timestamps and durations excluded.
Json canonical(const ResultSet& rs) {
    Json out = Json::object();
    for (const auto& r : rs.records()) {
        auto key = r.tool + "/" + r.bug.benchmark + "/" + r.bug.bug_id + "/" + std::to_string(r.seed);
        Json patches = Json::array();
        if (fs::exists(r.result_file()))
            for (const auto& p : result_from_json(read_json_file(r.result_file())).patches)
                patches.push_back({p.file, p.diff});
        out[key] = {{"outcome", std::string(to_string(r.outcome))},
                    {"patch_count", r.patch_count},
                    {"failed_phase", r.failed_phase ? Json(std::string(to_string(*r.failed_phase))) : Json()},
                    {"exit_code", r.exit.code ? Json(*r.exit.code) : Json()},
                    {"exit_signal", r.exit.signal ? Json(*r.exit.signal) : Json()},
                    {"watchdog", r.exit.terminated_by_watchdog},
                    {"patches", patches}};
    }
    return out;
}

void resume_correctness(Verdict& v, const fs::path& reference_root) {
    auto reference = canonical(load_results(reference_root).results);
    for (std::size_t k : {1, 13, 39}) {
        testing::TempDir root;
        auto plan = fixture_plan(root.path());
        ExecuteOptions first;
        first.parallelism = 4;
        first.stop_after = k;
        auto a = execute_campaign(plan, first);
        ExecuteOptions second;
        second.parallelism = 4;
        second.resume = true;
        auto b = execute_campaign(plan, second);
        auto loaded = load_results(root.path());
        bool same = loaded.malformed.empty() && canonical(loaded.results) == reference;
        v.require(a.executed == k && a.not_run == 40 - k, "k=" + std::to_string(k) + " interrupted");
        v.require(b.skipped == a.executed && b.executed + b.skipped == 40, "k=" + std::to_string(k) + " resumed");
        v.require(check_index(root.path()).consistent(), "k=" + std::to_string(k) + " index");
        v.require(same, "k=" + std::to_string(k) + " identical");
        v.detail << "k=" << k << ": " << a.executed << " then " << b.executed << (same ? " identical; " : " differs; ");
    }
}

AttemptRecord seeded(const fs::path& root, const std::string& name, Outcome outcome, const std::string& log) {
    AttemptRecord r;
    r.tool = "Seeded";
    r.bug = {"toy", "", name};
    r.outcome = outcome;
    r.exit.code = 1;
    r.attempt_dir = root / name;
    testing::write_text(r.log_file(), log);
    return r;
}

void classifier(Verdict& v, const fs::path& campaign_root) {
    auto catalog = default_catalog();
    auto loaded = load_results(campaign_root);
    const auto& rs = loaded.results;
    auto report = classify_results(rs, catalog);

    std::size_t non_patched = 0, timeouts = 0, timeouts_ok = 0, wrong = 0;
    std::map<AttemptKey, std::size_t> seen;
    for (const auto& [key, cause] : report.assignments) ++seen[key];
    bool one_each = true;
    for (const auto& r : rs.records()) {
        if (r.outcome == Outcome::Patched) {
            one_each &= !seen.contains(r.key());
            continue;
        }
        ++non_patched;
        one_each &= seen.count(r.key()) && seen.at(r.key()) == 1;
        auto cause = classify_failure_cause(r, catalog);
        if (r.outcome == Outcome::Timeout) {
            ++timeouts;
            timeouts_ok += cause == FailureCause::TimeBudget;
        } else if (r.bug.bug_id == "bug_10") {
            wrong += cause != FailureCause::Technical;
        } else if (r.bug.bug_id == "bug_09") {
            wrong += cause != FailureCause::Configuration;
        }
    }
    v.require(report.assignments.size() == non_patched && one_each, "one cause per non-PATCHED attempt");
    v.require(timeouts == 8 && timeouts_ok == timeouts, "TIMEOUT -> TIME_BUDGET");
    v.require(wrong == 0, "campaign causes");

    testing::TempDir logs;
    struct Seed {
        std::string name;
        Outcome outcome;
        std::string log;
        FailureCause want;
    };
    const std::vector<Seed> seeds = {
        {"s1", Outcome::Error, "[tool] sh: 1: Argument list too long\n", FailureCause::Technical},
        {"s2", Outcome::Error, "Exception in thread \"main\" InvalidClassPathException: lib/x.jar\n",
         FailureCause::Configuration},
        {"s3", Outcome::NoPatch, "line\n  java.lang.InvalidClassPathException at Main\n",
         FailureCause::Configuration},
        {"s4", Outcome::Error, "start\nexec: Argument list too long\nInvalidClassPathException\n",
         FailureCause::Technical},
    };
    std::size_t seeded_ok = 0;
    for (const auto& s : seeds)
        seeded_ok += classify_failure_cause(seeded(logs.path(), s.name, s.outcome, s.log), catalog) == s.want;
    v.require(seeded_ok == seeds.size(), "seeded markers");
    v.detail << non_patched << " non-PATCHED attempts, " << report.assignments.size() << " causes, " << timeouts_ok
             << "/" << timeouts << " TIMEOUT as TIME_BUDGET, seeded logs " << seeded_ok << "/" << seeds.size();
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](const std::string& name, const std::function<void(Verdict&)>& body) {
        Verdict v;
        try {
            body(v);
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail << "exception: " << e.what();
        }
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail.str() << std::endl;
        failures += !v.pass;
    };

    testing::TempDir campaign;
    report("chi-square reproduction", chi_square_reproduction);
    report("overlap matrix fidelity", overlap_fidelity);
    report("accounting identities", accounting_identities);
    report("end-to-end orchestration", [&](Verdict& v) { end_to_end(v, campaign.path()); });
    report("timeout enforcement", timeout_enforcement);
    report("resume correctness", [&](Verdict& v) { resume_correctness(v, campaign.path()); });
    report("classifier totality and fidelity", [&](Verdict& v) { classifier(v, campaign.path()); });
    return failures == 0 ? 0 : 1;
}
