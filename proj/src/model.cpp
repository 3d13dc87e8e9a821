#include "repairbench/model.hpp"

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <unistd.h>

#include "repairbench/error.hpp"

namespace repairbench {

std::string BugCoordinate::render() const {
    if (benchmark.empty()) return bug_id;
    return benchmark + ":" + bug_id;
}

void validate_bug_id(std::string_view bug_id) {
    if (bug_id.empty()) throw Error(ErrorCode::MalformedId, "empty bug id");
    if (bug_id.find_first_of("/\\") != std::string_view::npos)
        throw Error(ErrorCode::MalformedId, "bug id contains a path separator: " + std::string(bug_id));
    if (bug_id == "." || bug_id == "..")
        throw Error(ErrorCode::MalformedId, "bug id is not a directory name: " + std::string(bug_id));
}

BugCoordinate parse_bug_coordinate(std::string_view text, std::string_view default_benchmark) {
    BugCoordinate bug;
    auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        if (default_benchmark.empty())
            throw Error(ErrorCode::MalformedId,
                        "expected <benchmark>:<bug_id>, got '" + std::string(text) + "'");
        bug.benchmark = default_benchmark;
        bug.bug_id = text;
    } else {
        bug.benchmark = text.substr(0, colon);
        bug.bug_id = text.substr(colon + 1);
        if (bug.benchmark.empty())
            throw Error(ErrorCode::MalformedId, "empty benchmark segment in '" + std::string(text) + "'");
        if (!default_benchmark.empty() && bug.benchmark != default_benchmark)
            throw Error(ErrorCode::MalformedId, "bug '" + std::string(text) + "' does not belong to benchmark " +
                                                    std::string(default_benchmark));
    }
    if (bug.benchmark.find_first_of("/\\") != std::string::npos)
        throw Error(ErrorCode::MalformedId, "benchmark name contains a path separator");
    validate_bug_id(bug.bug_id);
    return bug;
}

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view text, const std::array<E, N>& values, std::string_view what) {
    for (E v : values)
        if (to_string(v) == text) return v;
    throw Error(ErrorCode::ManifestParseError, "unknown " + std::string(what) + " '" + std::string(text) + "'");
}

constexpr std::array<Phase, 7> kPhases = {Phase::Setup,  Phase::Checkout, Phase::Compile,  Phase::Info,
                                          Phase::Launch, Phase::Repair,   Phase::Normalize};

}  // namespace

std::string_view to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::Patched: return "PATCHED";
        case Outcome::NoPatch: return "NO_PATCH";
        case Outcome::Error: return "ERROR";
        case Outcome::Timeout: return "TIMEOUT";
    }
    return "?";
}

std::string_view to_string(FailureCause cause) {
    switch (cause) {
        case FailureCause::SearchSpaceMiss: return "SEARCH_SPACE_MISS";
        case FailureCause::FaultLocalization: return "FAULT_LOCALIZATION";
        case FailureCause::MultiLocation: return "MULTI_LOCATION";
        case FailureCause::TimeBudget: return "TIME_BUDGET";
        case FailureCause::Configuration: return "CONFIGURATION";
        case FailureCause::Technical: return "TECHNICAL";
        case FailureCause::Unknown: return "UNKNOWN";
    }
    return "?";
}

std::string_view to_string(Phase phase) {
    switch (phase) {
        case Phase::Setup: return "setup";
        case Phase::Checkout: return "checkout";
        case Phase::Compile: return "compile";
        case Phase::Info: return "info";
        case Phase::Launch: return "launch";
        case Phase::Repair: return "repair";
        case Phase::Normalize: return "normalize";
    }
    return "?";
}

Outcome parse_outcome(std::string_view text) {
    return parse_enum(text, std::to_array(kAllOutcomes), "outcome");
}

FailureCause parse_failure_cause(std::string_view text) {
    return parse_enum(text, std::to_array(kAllCauses), "failure cause");
}

Phase parse_phase(std::string_view text) { return parse_enum(text, kPhases, "phase"); }

Json to_json(const AttemptRecord& r) {
    Json exit = {{"terminated_by_watchdog", r.exit.terminated_by_watchdog},
                 {"orphan_survivor", r.exit.orphan_survivor}};
    exit["code"] = r.exit.code ? Json(*r.exit.code) : Json(nullptr);
    exit["signal"] = r.exit.signal ? Json(*r.exit.signal) : Json(nullptr);
    Json j = {
        {"schema_version", r.schema_version},
        {"tool", r.tool},
        {"benchmark", r.bug.benchmark},
        {"project", r.bug.project},
        {"bug_id", r.bug.bug_id},
        {"seed", r.seed},
        {"start_time", r.start_time},
        {"end_time", r.end_time},
        {"outcome", to_string(r.outcome)},
        {"exit", exit},
        {"patch_count", r.patch_count},
        {"log_path", r.log_path},
        {"result_path", r.result_path},
        {"durations",
         {{"checkout", r.durations.checkout},
          {"compile", r.durations.compile},
          {"info", r.durations.info},
          {"repair", r.durations.repair}}},
        {"diagnostic", r.diagnostic},
    };
    j["failed_phase"] = r.failed_phase ? Json(to_string(*r.failed_phase)) : Json(nullptr);
    return j;
}

AttemptRecord attempt_from_json(const Json& j) {
    try {
        AttemptRecord r;
        r.schema_version = j.at("schema_version").get<int>();
        r.tool = j.at("tool").get<std::string>();
        r.bug.benchmark = j.at("benchmark").get<std::string>();
        r.bug.project = j.value("project", "");
        r.bug.bug_id = j.at("bug_id").get<std::string>();
        r.seed = j.at("seed").get<std::int64_t>();
        r.start_time = j.at("start_time").get<std::string>();
        r.end_time = j.at("end_time").get<std::string>();
        r.outcome = parse_outcome(j.at("outcome").get<std::string>());
        const Json& exit = j.at("exit");
        if (!exit.at("code").is_null()) r.exit.code = exit.at("code").get<int>();
        if (!exit.at("signal").is_null()) r.exit.signal = exit.at("signal").get<int>();
        r.exit.terminated_by_watchdog = exit.at("terminated_by_watchdog").get<bool>();
        r.exit.orphan_survivor = exit.value("orphan_survivor", false);
        if (j.contains("failed_phase") && !j["failed_phase"].is_null())
            r.failed_phase = parse_phase(j["failed_phase"].get<std::string>());
        r.patch_count = j.at("patch_count").get<std::size_t>();
        r.log_path = j.at("log_path").get<std::string>();
        r.result_path = j.at("result_path").get<std::string>();
        const Json& d = j.at("durations");
        r.durations = {d.at("checkout").get<double>(), d.at("compile").get<double>(),
                       d.at("info").get<double>(), d.at("repair").get<double>()};
        r.diagnostic = j.value("diagnostic", "");
        validate_bug_id(r.bug.bug_id);
        return r;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ManifestParseError, std::string("attempt record: ") + e.what());
    }
}

void ResultSet::declare(std::set<std::string> tools, std::set<std::string> benchmarks) {
    declared_tools_ = std::move(tools);
    declared_benchmarks_ = std::move(benchmarks);
}

void ResultSet::insert(AttemptRecord record) {
    if (declared_tools_ && !declared_tools_->contains(record.tool))
        throw Error(ErrorCode::UndeclaredReference, "tool '" + record.tool + "' is not part of the campaign");
    if (declared_benchmarks_ && !declared_benchmarks_->contains(record.bug.benchmark))
        throw Error(ErrorCode::UndeclaredReference,
                    "benchmark '" + record.bug.benchmark + "' is not part of the campaign");
    auto key = record.key();
    if (index_.contains(key))
        throw Error(ErrorCode::DuplicateAttempt, "duplicate attempt " + key.tool + " on " + record.bug.render() +
                                                     " seed " + std::to_string(key.seed));
    index_.emplace(std::move(key), records_.size());
    records_.push_back(std::move(record));
}

const AttemptRecord* ResultSet::find(const AttemptKey& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &records_[it->second];
}

std::set<std::string> ResultSet::tools() const {
    std::set<std::string> out;
    for (const auto& r : records_) out.insert(r.tool);
    return out;
}

std::set<std::string> ResultSet::benchmarks() const {
    std::set<std::string> out;
    for (const auto& r : records_) out.insert(r.bug.benchmark);
    return out;
}

std::string iso8601_now() {
    using namespace std::chrono;
    auto now = system_clock::now();
    auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    std::time_t t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& json, int indent) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out << json.dump(indent) << '\n';
        if (!out.flush()) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

}  // namespace repairbench
