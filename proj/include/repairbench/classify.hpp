#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "repairbench/model.hpp"

namespace repairbench {

enum class RuleKind { LogPattern, OutcomeIs, ExitSignal, PhaseFailed };

enum class MatchMode { Substring, Regex };

std::string_view to_string(RuleKind kind);

/// One entry of a cause catalog. `pattern` depends on `kind`:
///   LOG_PATTERN   substring (or ECMAScript regex) matched per repair.log line
///   OUTCOME_IS    outcome name, e.g. `ERROR`
///   EXIT_SIGNAL   signal number, or empty for any signal
///   PHASE_FAILED  phase name, e.g. `compile`
struct CauseRule {
    int priority = 0;
    FailureCause cause = FailureCause::Unknown;
    RuleKind kind = RuleKind::LogPattern;
    std::string pattern;
    MatchMode match = MatchMode::Substring;
};

/// Rules sorted by priority. Throws INVALID_CATALOG for duplicate priorities,
/// UNKNOWN causes, bad kinds or regexes.
class CauseCatalog {
public:
    explicit CauseCatalog(std::vector<CauseRule> rules);

    const std::vector<CauseRule>& rules() const { return rules_; }

private:
    std::vector<CauseRule> rules_;
};

CauseCatalog parse_catalog(const Json& json);
CauseCatalog load_catalog(const std::filesystem::path& path);
Json to_json(const CauseCatalog& catalog);

/// Markers the shipped catalog recognises. Anything else becomes UNKNOWN.
CauseCatalog default_catalog();

/// Returns `record.outcome` after checking it against the watchdog flag.
/// Throws INCONSISTENT_RECORD when TIMEOUT lacks a watchdog kill or a
/// watchdog kill ended in anything but TIMEOUT or PATCHED.
Outcome classify_outcome(const AttemptRecord& record);

/// TIMEOUT maps to TIME_BUDGET; otherwise the first matching rule wins and
/// UNKNOWN is the fallback. The log is read from `record.log_file()` one line
/// at a time. Throws PATCHED_INPUT for patched attempts.
FailureCause classify_failure_cause(const AttemptRecord& record, const CauseCatalog& catalog);

struct CauseReport {
    /// (tool, benchmark) -> cause -> count, over non-PATCHED attempts.
    std::map<std::pair<std::string, std::string>, std::map<FailureCause, std::size_t>> counts;
    /// Per non-PATCHED attempt, in ResultSet order.
    std::vector<std::pair<AttemptKey, FailureCause>> assignments;
};

CauseReport classify_results(const ResultSet& results, const CauseCatalog& catalog);

/// `causes.csv` (tool,benchmark,cause,count) and `causes.md` (share of each
/// cause per tool). Returns the written paths.
std::vector<std::filesystem::path> write_cause_report(const CauseReport& report, const std::filesystem::path& dest);

}  // namespace repairbench
