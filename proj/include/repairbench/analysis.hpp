#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "repairbench/model.hpp"

namespace repairbench {

/// Tool -> bugs with at least one PATCHED attempt. Tools without any patched
/// bug are present with an empty set.
using PatchedSets = std::map<std::string, std::set<BugCoordinate>>;

PatchedSets patched_sets(const ResultSet& results);

struct Repairability {
    std::size_t unique = 0;
    std::size_t overlapped = 0;
    std::size_t total = 0;

    bool operator==(const Repairability&) const = default;
};

struct RepairabilityTable {
    std::map<std::string, Repairability> rows;
    /// Denominator of the percentage column (all bugs across benchmarks).
    std::size_t bug_count = 0;

    bool operator==(const RepairabilityTable&) const = default;
};

RepairabilityTable repairability(const PatchedSets& sets, std::size_t bug_count);

struct OverlapCell {
    std::size_t count = 0;
    /// Row-normalized and truncated; absent when the row tool patched nothing.
    std::optional<long> percentage;

    bool operator==(const OverlapCell&) const = default;
};

/// Off the diagonal, |Pi ∩ Pj| over |Pi|; on it, tool i's unique bugs.
struct OverlapMatrix {
    std::vector<std::string> tools;
    std::vector<std::vector<OverlapCell>> cells;

    const OverlapCell& at(const std::string& row, const std::string& column) const;
    bool operator==(const OverlapMatrix&) const = default;
};

OverlapMatrix overlap_matrix(const PatchedSets& sets);

struct BenchmarkTable {
    std::vector<std::string> tools;
    std::vector<std::string> benchmarks;
    std::map<std::string, std::size_t> sizes;
    /// (tool, benchmark) -> patched bugs
    std::map<std::string, std::map<std::string, std::size_t>> patched;
    std::map<std::string, std::size_t> tool_totals;
    /// Union over tools, per benchmark.
    std::map<std::string, std::size_t> unique_per_benchmark;
    std::size_t unique_total = 0;
    std::size_t bug_total = 0;

    /// Sum of the patched counts in one benchmark column.
    std::size_t column_total(const std::string& benchmark) const;
    /// Sum of all tool totals.
    std::size_t grand_total() const;
    bool operator==(const BenchmarkTable&) const = default;
};

/// Distinct bugs attempted per benchmark, for when manifests are unavailable.
std::map<std::string, std::size_t> benchmark_sizes(const ResultSet& results);

/// Benchmarks are the keys of `sizes` plus any that appear in `sets`.
BenchmarkTable benchmark_table(const PatchedSets& sets, const std::map<std::string, std::size_t>& sizes);

/// a = patched on the reference benchmark, b = not patched there,
/// c = patched elsewhere, d = not patched elsewhere.
struct ContingencyTable {
    long a = 0;
    long b = 0;
    long c = 0;
    long d = 0;

    bool operator==(const ContingencyTable&) const = default;
};

/// Pearson statistic without continuity correction. Throws DEGENERATE_TABLE
/// when a marginal is zero and INVALID_CONFIG for negative cells.
double chi_square_statistic(const ContingencyTable& table);

/// Upper tail of the Chi-square distribution. Only df = 1 is supported
/// (UNSUPPORTED_DF otherwise).
double chi_square_p_value(double statistic, int df = 1);

struct OverfitTestResult {
    std::string tool;
    ContingencyTable table;
    std::optional<double> statistic;
    std::optional<double> p_value;
    double alpha = 0.05;
    bool reject_null = false;
    /// Set when the test could not be computed for this tool.
    std::string error;

    bool operator==(const OverfitTestResult&) const = default;
};

ContingencyTable contingency(const BenchmarkTable& table, const std::string& tool, const std::string& reference);

/// One result per tool. Throws UNKNOWN_BENCHMARK when `reference` is not in
/// the table; per-tool failures are recorded in `error`.
std::vector<OverfitTestResult> overfit_test(const BenchmarkTable& table, const std::string& reference,
                                            double alpha = 0.05);

struct RateCell {
    std::size_t count = 0;
    std::size_t attempts = 0;

    std::optional<double> percentage() const;
    bool operator==(const RateCell&) const = default;
};

/// Share of attempts with one outcome per (tool, benchmark), with averages
/// over attempts (weighted) and over cells (unweighted).
struct RateTable {
    Outcome outcome = Outcome::Error;
    std::vector<std::string> tools;
    std::vector<std::string> benchmarks;
    std::map<std::string, std::map<std::string, RateCell>> cells;

    /// Pooled counts per tool, per benchmark and overall.
    RateCell tool_pooled(const std::string& tool) const;
    RateCell benchmark_pooled(const std::string& benchmark) const;
    RateCell overall() const;
    /// Means of the present cell percentages.
    std::optional<double> tool_unweighted(const std::string& tool) const;
    std::optional<double> benchmark_unweighted(const std::string& benchmark) const;
    std::optional<double> overall_unweighted() const;

    bool operator==(const RateTable&) const = default;
};

RateTable rate_table(const ResultSet& results, Outcome outcome);

struct AnalysisBundle {
    RepairabilityTable repairability;
    OverlapMatrix overlap;
    BenchmarkTable benchmarks;
    std::string reference;
    std::vector<OverfitTestResult> overfit;
    RateTable error_rates;
    RateTable timeout_rates;

    bool operator==(const AnalysisBundle&) const = default;
};

/// All analyses over one result set. `sizes` defaults to the attempted bugs.
/// When `reference` is not among the benchmarks the overfit list is empty.
AnalysisBundle analyze(const ResultSet& results, const std::map<std::string, std::size_t>& sizes,
                       const std::string& reference, double alpha = 0.05);

enum class ReportFormat { Markdown, Csv, Json };

ReportFormat parse_report_format(std::string_view text);

/// Writes repairability, overlap_matrix, benchmark_table, overfit_test,
/// error_rates and timeout_rates in `format` under `dest`. Throws IO_ERROR.
std::vector<std::filesystem::path> emit_report(const AnalysisBundle& bundle, ReportFormat format,
                                               const std::filesystem::path& dest);

/// Reads back a JSON report written by `emit_report`.
AnalysisBundle load_json_report(const std::filesystem::path& dest);

}  // namespace repairbench
