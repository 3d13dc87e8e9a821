#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace repairbench {

using Json = nlohmann::json;

/// Version of the on-disk attempt schema (`attempt.json`, `results.json`).
/// Bumping it invalidates campaign resume.
inline constexpr int kSchemaVersion = 1;

/// Identity of one bug inside one benchmark. `bug_id` is opaque: benchmarks
/// use different shapes (`Chart-7`, `quicksort`, `bug_03`), but it always
/// names a directory so path separators are rejected.
struct BugCoordinate {
    std::string benchmark;
    std::string project;
    std::string bug_id;

    /// `<benchmark>:<bug_id>`, or just the id when the benchmark is unset.
    std::string render() const;

    friend bool operator==(const BugCoordinate& a, const BugCoordinate& b) {
        return a.benchmark == b.benchmark && a.bug_id == b.bug_id;
    }
    friend std::strong_ordering operator<=>(const BugCoordinate& a, const BugCoordinate& b) {
        if (auto c = a.benchmark <=> b.benchmark; c != 0) return c;
        return a.bug_id <=> b.bug_id;
    }
};

/// Throws MALFORMED_ID when the id is empty or contains a path separator.
void validate_bug_id(std::string_view bug_id);

/// Parses `<benchmark>:<bug_id>`, or a bare `<bug_id>` when `default_benchmark`
/// is given.
BugCoordinate parse_bug_coordinate(std::string_view text, std::string_view default_benchmark = {});

enum class Outcome { Patched, NoPatch, Error, Timeout };

enum class FailureCause {
    SearchSpaceMiss,
    FaultLocalization,
    MultiLocation,
    TimeBudget,
    Configuration,
    Technical,
    Unknown,
};

/// Stages of one repair attempt, in execution order.
enum class Phase { Setup, Checkout, Compile, Info, Launch, Repair, Normalize };

inline constexpr Outcome kAllOutcomes[] = {Outcome::Patched, Outcome::NoPatch, Outcome::Error,
                                           Outcome::Timeout};
inline constexpr FailureCause kAllCauses[] = {
    FailureCause::SearchSpaceMiss, FailureCause::FaultLocalization, FailureCause::MultiLocation,
    FailureCause::TimeBudget,      FailureCause::Configuration,     FailureCause::Technical,
    FailureCause::Unknown};

std::string_view to_string(Outcome outcome);
std::string_view to_string(FailureCause cause);
std::string_view to_string(Phase phase);
Outcome parse_outcome(std::string_view text);
FailureCause parse_failure_cause(std::string_view text);
Phase parse_phase(std::string_view text);

struct ExitInfo {
    std::optional<int> code;
    std::optional<int> signal;
    bool terminated_by_watchdog = false;
    bool orphan_survivor = false;
};

struct PhaseDurations {
    double checkout = 0;
    double compile = 0;
    double info = 0;
    double repair = 0;
};

struct AttemptKey {
    std::string tool;
    std::string benchmark;
    std::string bug_id;
    std::int64_t seed = 0;

    auto operator<=>(const AttemptKey&) const = default;
};

/// Full provenance of one repair attempt, persisted as `attempt.json`.
struct AttemptRecord {
    int schema_version = kSchemaVersion;
    std::string tool;
    BugCoordinate bug;
    std::int64_t seed = 0;
    std::string start_time;
    std::string end_time;
    Outcome outcome = Outcome::Error;
    ExitInfo exit;
    std::optional<Phase> failed_phase;
    std::size_t patch_count = 0;
    // Relative to the attempt directory.
    std::string log_path = "repair.log";
    std::string result_path = "results.json";
    PhaseDurations durations;
    std::string diagnostic;

    // Where the record was read from or written to; not serialized.
    std::filesystem::path attempt_dir;

    AttemptKey key() const { return {tool, bug.benchmark, bug.bug_id, seed}; }
    std::filesystem::path log_file() const { return attempt_dir / log_path; }
    std::filesystem::path result_file() const { return attempt_dir / result_path; }
};

Json to_json(const AttemptRecord& record);
/// Throws MANIFEST_PARSE_ERROR on missing or mistyped fields.
AttemptRecord attempt_from_json(const Json& json);

/// Immutable-after-load collection of attempts keyed by (tool, benchmark, bug, seed).
class ResultSet {
public:
    ResultSet() = default;

    /// Restricts future insertions to the given tools and benchmarks.
    void declare(std::set<std::string> tools, std::set<std::string> benchmarks);

    /// Throws DUPLICATE_ATTEMPT for a repeated key and UNDECLARED_REFERENCE for
    /// tools or benchmarks outside the declared campaign.
    void insert(AttemptRecord record);

    const std::vector<AttemptRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const AttemptRecord* find(const AttemptKey& key) const;

    std::set<std::string> tools() const;
    std::set<std::string> benchmarks() const;

private:
    std::vector<AttemptRecord> records_;
    std::map<AttemptKey, std::size_t> index_;
    std::optional<std::set<std::string>> declared_tools_;
    std::optional<std::set<std::string>> declared_benchmarks_;
};

/// Reads and parses a JSON file. Throws IO_ERROR or PARSE_ERROR.
Json read_json_file(const std::filesystem::path& path);

/// Writes `json` through a temporary file and a rename, so readers never see
/// a partial document. Throws IO_ERROR.
void write_json_file(const std::filesystem::path& path, const Json& json, int indent = 2);

/// UTC timestamp with millisecond precision, e.g. `2024-01-02T03:04:05.678Z`.
std::string iso8601_now();

}  // namespace repairbench
