#include "repairbench/classify.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <optional>
#include <regex>
#include <set>

#include "repairbench/error.hpp"
#include "repairbench/format.hpp"

namespace fs = std::filesystem;

namespace repairbench {

std::string_view to_string(RuleKind kind) {
    switch (kind) {
        case RuleKind::LogPattern: return "LOG_PATTERN";
        case RuleKind::OutcomeIs: return "OUTCOME_IS";
        case RuleKind::ExitSignal: return "EXIT_SIGNAL";
        case RuleKind::PhaseFailed: return "PHASE_FAILED";
    }
    return "?";
}

namespace {

RuleKind parse_kind(const std::string& s) {
    for (auto k : {RuleKind::LogPattern, RuleKind::OutcomeIs, RuleKind::ExitSignal, RuleKind::PhaseFailed})
        if (to_string(k) == s) return k;
    throw Error(ErrorCode::InvalidCatalog, "unknown rule kind '" + s + "'");
}

}  // namespace

CauseCatalog::CauseCatalog(std::vector<CauseRule> rules) : rules_(std::move(rules)) {
    std::set<int> seen;
    for (const auto& r : rules_) {
        if (!seen.insert(r.priority).second)
            throw Error(ErrorCode::InvalidCatalog, "duplicate priority " + std::to_string(r.priority));
        if (r.cause == FailureCause::Unknown)
            throw Error(ErrorCode::InvalidCatalog, "rule " + std::to_string(r.priority) + " names UNKNOWN");
        try {
            switch (r.kind) {
                case RuleKind::LogPattern:
                    if (r.pattern.empty()) throw Error(ErrorCode::InvalidCatalog, "empty log pattern");
                    if (r.match == MatchMode::Regex) std::regex check(r.pattern);
                    break;
                case RuleKind::OutcomeIs:
                    if (parse_outcome(r.pattern) == Outcome::Patched)
                        throw Error(ErrorCode::InvalidCatalog, "PATCHED attempts have no failure cause");
                    break;
                case RuleKind::PhaseFailed: parse_phase(r.pattern); break;
                case RuleKind::ExitSignal:
                    if (!r.pattern.empty()) (void)std::stoi(r.pattern);
                    break;
            }
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidCatalog, "rule " + std::to_string(r.priority) + ": " + e.what());
        } catch (const std::exception& e) {
            throw Error(ErrorCode::InvalidCatalog,
                        "rule " + std::to_string(r.priority) + ": bad pattern '" + r.pattern + "': " + e.what());
        }
    }
    std::sort(rules_.begin(), rules_.end(), [](const auto& a, const auto& b) { return a.priority < b.priority; });
}

CauseCatalog parse_catalog(const Json& j) {
    if (!j.is_array()) throw Error(ErrorCode::InvalidCatalog, "cause catalog must be a JSON array");
    std::vector<CauseRule> rules;
    for (const auto& item : j) {
        try {
            CauseRule r;
            r.priority = item.at("priority").get<int>();
            r.cause = parse_failure_cause(item.at("cause").get<std::string>());
            r.kind = parse_kind(item.at("kind").get<std::string>());
            if (item.contains("pattern")) {
                const auto& p = item["pattern"];
                r.pattern = p.is_string() ? p.get<std::string>() : p.dump();
            }
            std::string match = item.value("match", "substring");
            if (match == "regex")
                r.match = MatchMode::Regex;
            else if (match != "substring")
                throw Error(ErrorCode::InvalidCatalog, "unknown match mode '" + match + "'");
            rules.push_back(std::move(r));
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::InvalidCatalog, std::string("catalog entry: ") + e.what());
        } catch (const Error& e) {
            if (e.code() == ErrorCode::InvalidCatalog) throw;
            throw Error(ErrorCode::InvalidCatalog, e.what());
        }
    }
    return CauseCatalog(std::move(rules));
}

CauseCatalog load_catalog(const fs::path& path) {
    try {
        return parse_catalog(read_json_file(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidCatalog) throw;
        throw Error(ErrorCode::InvalidCatalog, e.what());
    }
}

Json to_json(const CauseCatalog& catalog) {
    Json out = Json::array();
    for (const auto& r : catalog.rules()) {
        Json j{{"priority", r.priority},
               {"cause", std::string(to_string(r.cause))},
               {"kind", std::string(to_string(r.kind))},
               {"pattern", r.pattern}};
        if (r.match == MatchMode::Regex) j["match"] = "regex";
        out.push_back(std::move(j));
    }
    return out;
}

CauseCatalog default_catalog() {
    using enum FailureCause;
    return CauseCatalog({
        {10, Technical, RuleKind::LogPattern, "Argument list too long"},
        {20, Configuration, RuleKind::LogPattern, "InvalidClassPathException"},
        {30, Configuration, RuleKind::PhaseFailed, "compile"},
        {40, Configuration, RuleKind::PhaseFailed, "info"},
        {50, Technical, RuleKind::PhaseFailed, "checkout"},
        {60, FaultLocalization, RuleKind::LogPattern, "no suspicious statements found"},
        {70, SearchSpaceMiss, RuleKind::LogPattern, "search space exhausted"},
        {1000, Technical, RuleKind::OutcomeIs, "ERROR"},
    });
}

Outcome classify_outcome(const AttemptRecord& r) {
    bool watchdog = r.exit.terminated_by_watchdog;
    if (r.outcome == Outcome::Timeout && !watchdog)
        throw Error(ErrorCode::InconsistentRecord, "TIMEOUT without a watchdog kill in " + r.attempt_dir.string());
    if (watchdog && r.outcome != Outcome::Timeout && r.outcome != Outcome::Patched)
        throw Error(ErrorCode::InconsistentRecord, "watchdog kill recorded as " + std::string(to_string(r.outcome)) +
                                                       " in " + r.attempt_dir.string());
    if (r.outcome == Outcome::Patched && r.patch_count == 0)
        throw Error(ErrorCode::InconsistentRecord, "PATCHED without patches in " + r.attempt_dir.string());
    return r.outcome;
}

namespace {

bool record_matches(const CauseRule& rule, const AttemptRecord& r) {
    switch (rule.kind) {
        case RuleKind::OutcomeIs: return r.outcome == parse_outcome(rule.pattern);
        case RuleKind::PhaseFailed: return r.failed_phase && *r.failed_phase == parse_phase(rule.pattern);
        case RuleKind::ExitSignal:
            return r.exit.signal && (rule.pattern.empty() || *r.exit.signal == std::stoi(rule.pattern));
        case RuleKind::LogPattern: return false;
    }
    return false;
}

// Lowest index of a log rule matching any line, or nullopt.
std::optional<std::size_t> first_log_match(const std::vector<CauseRule>& rules, const fs::path& log,
                                           std::size_t stop_at) {
    std::vector<std::pair<std::size_t, std::optional<std::regex>>> active;
    for (std::size_t i = 0; i < rules.size() && i < stop_at; ++i) {
        if (rules[i].kind != RuleKind::LogPattern) continue;
        if (rules[i].match == MatchMode::Regex)
            active.emplace_back(i, std::regex(rules[i].pattern));
        else
            active.emplace_back(i, std::nullopt);
    }
    if (active.empty()) return std::nullopt;

    std::ifstream in(log, std::ios::binary);
    std::optional<std::size_t> best;
    std::string line;
    while (std::getline(in, line)) {
        for (const auto& [i, re] : active) {
            if (best && i >= *best) break;
            bool hit = re ? std::regex_search(line, *re) : line.find(rules[i].pattern) != std::string::npos;
            if (hit) {
                best = i;
                break;
            }
        }
        if (best && *best == active.front().first) break;
    }
    return best;
}

}  // namespace

FailureCause classify_failure_cause(const AttemptRecord& record, const CauseCatalog& catalog) {
    if (record.outcome == Outcome::Patched)
        throw Error(ErrorCode::PatchedInput, "attempt " + record.attempt_dir.string() + " is PATCHED");
    if (record.outcome == Outcome::Timeout) return FailureCause::TimeBudget;

    const auto& rules = catalog.rules();
    std::size_t first_record_hit = rules.size();
    for (std::size_t i = 0; i < rules.size(); ++i)
        if (record_matches(rules[i], record)) {
            first_record_hit = i;
            break;
        }
    auto log_hit = first_log_match(rules, record.log_file(), first_record_hit);
    std::size_t winner = log_hit ? std::min(*log_hit, first_record_hit) : first_record_hit;
    return winner < rules.size() ? rules[winner].cause : FailureCause::Unknown;
}

CauseReport classify_results(const ResultSet& results, const CauseCatalog& catalog) {
    CauseReport report;
    for (const auto& r : results.records()) {
        if (classify_outcome(r) == Outcome::Patched) continue;
        auto cause = classify_failure_cause(r, catalog);
        report.counts[{r.tool, r.bug.benchmark}][cause]++;
        report.assignments.emplace_back(r.key(), cause);
    }
    return report;
}

std::vector<fs::path> write_cause_report(const CauseReport& report, const fs::path& dest) {
    std::error_code ec;
    fs::create_directories(dest, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dest.string() + ": " + ec.message());

    auto csv_path = dest / "causes.csv";
    std::ofstream csv(csv_path, std::ios::binary);
    csv << "tool,benchmark,cause,count\n";
    std::map<std::string, std::map<FailureCause, std::size_t>> per_tool;
    for (const auto& [key, causes] : report.counts)
        for (const auto& [cause, n] : causes) {
            csv << key.first << ',' << key.second << ',' << to_string(cause) << ',' << n << '\n';
            per_tool[key.first][cause] += n;
        }
    if (!csv) throw Error(ErrorCode::IoError, "cannot write " + csv_path.string());

    auto md_path = dest / "causes.md";
    std::ofstream md(md_path, std::ios::binary);
    md << "| Tool |";
    for (auto c : kAllCauses) md << ' ' << to_string(c) << " |";
    md << " Attempts |\n|---|";
    for (std::size_t i = 0; i < std::size(kAllCauses); ++i) md << "---:|";
    md << "---:|\n";
    for (const auto& [tool, causes] : per_tool) {
        std::size_t total = 0;
        for (const auto& [c, n] : causes) total += n;
        md << "| " << tool << " |";
        for (auto c : kAllCauses) {
            auto it = causes.find(c);
            md << ' ' << percent_2dp(it == causes.end() ? 0 : it->second, total) << " |";
        }
        md << ' ' << total << " |\n";
    }
    if (!md) throw Error(ErrorCode::IoError, "cannot write " + md_path.string());
    return {csv_path, md_path};
}

}  // namespace repairbench
