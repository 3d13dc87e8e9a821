#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "repairbench/benchmark.hpp"
#include "repairbench/model.hpp"
#include "repairbench/runner.hpp"
#include "repairbench/tool.hpp"

namespace repairbench {

struct CampaignPlan {
    struct Entry {
        std::size_t tool = 0;       // index into `tools`
        std::size_t benchmark = 0;  // index into `benchmarks`
        BugCoordinate bug;
        std::int64_t seed = 0;
    };

    std::vector<ToolDescriptor> tools;
    std::vector<BenchmarkDescriptor> benchmarks;
    /// Ordered by tool name, then benchmark, then bug id.
    std::vector<Entry> entries;
    AttemptConfig config;
    std::filesystem::path root;

    AttemptKey key(const Entry& e) const;
    std::filesystem::path directory(const Entry& e) const;
};

/// Cartesian product of tools and (filtered) bugs. Throws EMPTY_PLAN when no
/// bug survives the filter and INVALID_CONFIG for duplicate tool or benchmark
/// names or an invalid config.
CampaignPlan plan_campaign(std::vector<ToolDescriptor> tools, std::vector<BenchmarkDescriptor> benchmarks,
                           const BugFilter& filter, const AttemptConfig& config, std::filesystem::path root);

/// Logical CPUs / 2, at least 1.
unsigned default_parallelism();

struct ExecuteOptions {
    unsigned parallelism = default_parallelism();
    bool resume = false;
    /// Fault injection: start at most this many attempts, so exactly that many
    /// complete before the run ends as if the process had died there.
    std::optional<std::size_t> stop_after;
    /// Called after every executed attempt, from the worker thread, serialized.
    std::function<void(const AttemptRecord&)> on_complete;
};

struct CampaignSummary {
    /// Outcomes of attempts executed in this run.
    std::map<Outcome, std::size_t> counts;
    std::size_t executed = 0;
    /// Entries with a valid `attempt.json` from an earlier run.
    std::size_t skipped = 0;
    /// Entries never started because of `stop_after`.
    std::size_t not_run = 0;
    /// Entries the framework could not run at all (unusable attempt directory).
    std::vector<std::pair<AttemptKey, std::string>> failures;
    /// Outcomes per (tool, benchmark), including skipped entries.
    std::map<std::pair<std::string, std::string>, std::map<Outcome, std::size_t>> matrix;
    double wall_time_seconds = 0;
};

inline constexpr const char* kCampaignIndex = "campaign_index.jsonl";

/// Runs the plan bug-major (all tools on one bug before the next bug) with at
/// most `parallelism` concurrent attempts. Without `resume`, an entry whose
/// directory already holds data is reported as a failure rather than
/// overwritten. Throws CAMPAIGN_IO_ERROR when the root or the index cannot be
/// written.
CampaignSummary execute_campaign(const CampaignPlan& plan, const ExecuteOptions& options = {});

struct LoadedResults {
    ResultSet results;
    std::vector<std::filesystem::path> malformed;
};

/// Every `attempt.json` under `root`. Unreadable or duplicate records are
/// listed in `malformed`; a missing root yields an empty set.
LoadedResults load_results(const std::filesystem::path& root);

struct IndexCheck {
    /// Attempt directories (relative to root) with no index line.
    std::vector<std::string> missing_from_index;
    /// Index lines whose attempt directory has no valid `attempt.json`.
    std::vector<std::string> missing_from_tree;
    /// Index lines that are not valid JSON.
    std::size_t malformed_lines = 0;

    bool consistent() const { return missing_from_index.empty() && missing_from_tree.empty() && malformed_lines == 0; }
};

/// Cross-checks the campaign index against the directory tree.
IndexCheck check_index(const std::filesystem::path& root);

}  // namespace repairbench
