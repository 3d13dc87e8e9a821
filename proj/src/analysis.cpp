#include "repairbench/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "repairbench/error.hpp"
#include "repairbench/format.hpp"

namespace repairbench {

PatchedSets patched_sets(const ResultSet& results) {
    PatchedSets sets;
    for (const auto& tool : results.tools()) sets[tool];
    for (const auto& r : results.records())
        if (r.outcome == Outcome::Patched) sets[r.tool].insert(r.bug);
    return sets;
}

RepairabilityTable repairability(const PatchedSets& sets, std::size_t bug_count) {
    RepairabilityTable table;
    table.bug_count = bug_count;
    for (const auto& [tool, mine] : sets) {
        Repairability r;
        r.total = mine.size();
        for (const auto& bug : mine) {
            bool shared = std::any_of(sets.begin(), sets.end(), [&](const auto& other) {
                return other.first != tool && other.second.contains(bug);
            });
            if (!shared) ++r.unique;
        }
        r.overlapped = r.total - r.unique;
        table.rows[tool] = r;
    }
    return table;
}

const OverlapCell& OverlapMatrix::at(const std::string& row, const std::string& column) const {
    auto i = std::find(tools.begin(), tools.end(), row);
    auto j = std::find(tools.begin(), tools.end(), column);
    if (i == tools.end() || j == tools.end())
        throw Error(ErrorCode::UndeclaredReference, "no overlap cell for " + row + " x " + column);
    return cells[i - tools.begin()][j - tools.begin()];
}

OverlapMatrix overlap_matrix(const PatchedSets& sets) {
    OverlapMatrix m;
    auto rep = repairability(sets, 0);
    for (const auto& [tool, _] : sets) m.tools.push_back(tool);
    for (const auto& row : m.tools) {
        const auto& pi = sets.at(row);
        std::vector<OverlapCell> cells;
        for (const auto& column : m.tools) {
            OverlapCell cell;
            if (row == column) {
                cell.count = rep.rows.at(row).unique;
            } else {
                const auto& pj = sets.at(column);
                cell.count = static_cast<std::size_t>(std::count_if(
                    pi.begin(), pi.end(), [&](const BugCoordinate& b) { return pj.contains(b); }));
            }
            if (!pi.empty()) cell.percentage = percent_floor(cell.count, pi.size());
            cells.push_back(cell);
        }
        m.cells.push_back(std::move(cells));
    }
    return m;
}

std::size_t BenchmarkTable::column_total(const std::string& benchmark) const {
    std::size_t sum = 0;
    for (const auto& [_, row] : patched)
        if (auto it = row.find(benchmark); it != row.end()) sum += it->second;
    return sum;
}

std::size_t BenchmarkTable::grand_total() const {
    std::size_t sum = 0;
    for (const auto& [_, n] : tool_totals) sum += n;
    return sum;
}

std::map<std::string, std::size_t> benchmark_sizes(const ResultSet& results) {
    std::map<std::string, std::set<std::string>> bugs;
    for (const auto& r : results.records()) bugs[r.bug.benchmark].insert(r.bug.bug_id);
    std::map<std::string, std::size_t> out;
    for (const auto& [b, ids] : bugs) out[b] = ids.size();
    return out;
}

BenchmarkTable benchmark_table(const PatchedSets& sets, const std::map<std::string, std::size_t>& sizes) {
    BenchmarkTable t;
    std::set<std::string> benchmarks;
    for (const auto& [b, _] : sizes) benchmarks.insert(b);
    for (const auto& [_, bugs] : sets)
        for (const auto& bug : bugs) benchmarks.insert(bug.benchmark);
    t.benchmarks.assign(benchmarks.begin(), benchmarks.end());

    std::map<std::string, std::set<std::string>> unions;
    for (const auto& [tool, bugs] : sets) {
        t.tools.push_back(tool);
        auto& row = t.patched[tool];
        for (const auto& b : t.benchmarks) row[b] = 0;
        for (const auto& bug : bugs) {
            row[bug.benchmark]++;
            unions[bug.benchmark].insert(bug.bug_id);
        }
        t.tool_totals[tool] = bugs.size();
    }
    for (const auto& b : t.benchmarks) {
        auto it = sizes.find(b);
        t.sizes[b] = it != sizes.end() ? it->second : 0;
        t.unique_per_benchmark[b] = unions[b].size();
        t.unique_total += unions[b].size();
        t.bug_total += t.sizes[b];
    }
    return t;
}

double chi_square_statistic(const ContingencyTable& t) {
    if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0)
        throw Error(ErrorCode::InvalidConfig, "contingency cells must be non-negative");
    long double a = t.a, b = t.b, c = t.c, d = t.d;
    long double r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
    if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0)
        throw Error(ErrorCode::DegenerateTable, "contingency table has an empty row or column");
    long double n = r1 + r2;
    long double diff = a * d - b * c;
    return static_cast<double>(n * diff * diff / (r1 * r2 * c1 * c2));
}

double chi_square_p_value(double statistic, int df) {
    if (df != 1) throw Error(ErrorCode::UnsupportedDf, "only one degree of freedom is supported, got " + std::to_string(df));
    if (!(statistic >= 0)) throw Error(ErrorCode::InvalidConfig, "Chi-square statistic must be non-negative");
    return std::erfc(std::sqrt(statistic / 2.0));
}

ContingencyTable contingency(const BenchmarkTable& t, const std::string& tool, const std::string& reference) {
    if (!t.sizes.contains(reference))
        throw Error(ErrorCode::UnknownBenchmark, "reference benchmark '" + reference + "' is not in the table");
    const auto& row = t.patched.at(tool);
    ContingencyTable c;
    long ref_size = static_cast<long>(t.sizes.at(reference));
    long other_size = static_cast<long>(t.bug_total) - ref_size;
    c.a = static_cast<long>(row.at(reference));
    c.b = ref_size - c.a;
    c.c = static_cast<long>(t.tool_totals.at(tool)) - c.a;
    c.d = other_size - c.c;
    return c;
}

std::vector<OverfitTestResult> overfit_test(const BenchmarkTable& t, const std::string& reference, double alpha) {
    if (!t.sizes.contains(reference))
        throw Error(ErrorCode::UnknownBenchmark, "reference benchmark '" + reference + "' is not in the table");
    std::vector<OverfitTestResult> out;
    for (const auto& tool : t.tools) {
        OverfitTestResult r;
        r.tool = tool;
        r.alpha = alpha;
        r.table = contingency(t, tool, reference);
        try {
            r.statistic = chi_square_statistic(r.table);
            r.p_value = chi_square_p_value(*r.statistic);
            r.reject_null = *r.p_value < alpha;
        } catch (const Error& e) {
            r.error = e.what();
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::optional<double> RateCell::percentage() const {
    if (attempts == 0) return std::nullopt;
    return 100.0 * static_cast<double>(count) / static_cast<double>(attempts);
}

namespace {

std::optional<double> mean(const std::vector<double>& xs) {
    if (xs.empty()) return std::nullopt;
    double s = 0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

}  // namespace

RateCell RateTable::tool_pooled(const std::string& tool) const {
    RateCell pooled;
    if (auto it = cells.find(tool); it != cells.end())
        for (const auto& [_, c] : it->second) {
            pooled.count += c.count;
            pooled.attempts += c.attempts;
        }
    return pooled;
}

RateCell RateTable::benchmark_pooled(const std::string& benchmark) const {
    RateCell pooled;
    for (const auto& [_, row] : cells)
        if (auto it = row.find(benchmark); it != row.end()) {
            pooled.count += it->second.count;
            pooled.attempts += it->second.attempts;
        }
    return pooled;
}

RateCell RateTable::overall() const {
    RateCell pooled;
    for (const auto& [_, row] : cells)
        for (const auto& [__, c] : row) {
            pooled.count += c.count;
            pooled.attempts += c.attempts;
        }
    return pooled;
}

std::optional<double> RateTable::tool_unweighted(const std::string& tool) const {
    std::vector<double> xs;
    if (auto it = cells.find(tool); it != cells.end())
        for (const auto& [_, c] : it->second)
            if (auto p = c.percentage()) xs.push_back(*p);
    return mean(xs);
}

std::optional<double> RateTable::benchmark_unweighted(const std::string& benchmark) const {
    std::vector<double> xs;
    for (const auto& [_, row] : cells)
        if (auto it = row.find(benchmark); it != row.end())
            if (auto p = it->second.percentage()) xs.push_back(*p);
    return mean(xs);
}

std::optional<double> RateTable::overall_unweighted() const {
    std::vector<double> xs;
    for (const auto& [_, row] : cells)
        for (const auto& [__, c] : row)
            if (auto p = c.percentage()) xs.push_back(*p);
    return mean(xs);
}

RateTable rate_table(const ResultSet& results, Outcome outcome) {
    RateTable t;
    t.outcome = outcome;
    auto tools = results.tools();
    auto benchmarks = results.benchmarks();
    t.tools.assign(tools.begin(), tools.end());
    t.benchmarks.assign(benchmarks.begin(), benchmarks.end());
    for (const auto& r : results.records()) {
        auto& cell = t.cells[r.tool][r.bug.benchmark];
        cell.attempts++;
        if (r.outcome == outcome) cell.count++;
    }
    return t;
}

AnalysisBundle analyze(const ResultSet& results, const std::map<std::string, std::size_t>& sizes,
                       const std::string& reference, double alpha) {
    AnalysisBundle bundle;
    auto effective = sizes.empty() ? benchmark_sizes(results) : sizes;
    auto sets = patched_sets(results);
    bundle.benchmarks = benchmark_table(sets, effective);
    bundle.repairability = repairability(sets, bundle.benchmarks.bug_total);
    bundle.overlap = overlap_matrix(sets);
    bundle.reference = reference;
    if (bundle.benchmarks.sizes.contains(reference)) bundle.overfit = overfit_test(bundle.benchmarks, reference, alpha);
    bundle.error_rates = rate_table(results, Outcome::Error);
    bundle.timeout_rates = rate_table(results, Outcome::Timeout);
    return bundle;
}

}  // namespace repairbench
