#include "repairbench/benchmark.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "repairbench/error.hpp"

namespace fs = std::filesystem;

namespace repairbench {

namespace {

const std::set<std::string> kHookPlaceholders = {"bug_id", "workspace", "project", "benchmark"};

// Returns the placeholder names used in `text`; throws on unbalanced braces.
std::vector<std::string> placeholders_in(std::string_view text) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '}') throw Error(ErrorCode::ManifestParseError, "unbalanced '}' in '" + std::string(text) + "'");
        if (text[i] != '{') continue;
        auto close = text.find('}', i);
        if (close == std::string_view::npos)
            throw Error(ErrorCode::ManifestParseError, "unclosed '{' in '" + std::string(text) + "'");
        names.emplace_back(text.substr(i + 1, close - i - 1));
        i = close;
    }
    return names;
}

HookTemplate parse_hook(const Json& hook, std::string_view which, const fs::path& base_dir,
                        const std::set<std::string>& allowed) {
    if (!hook.is_object() || !hook.contains("cmd") || !hook["cmd"].is_array() || hook["cmd"].empty())
        throw Error(ErrorCode::ManifestParseError, std::string(which) + " hook needs a non-empty 'cmd' array");
    HookTemplate t;
    for (const auto& arg : hook["cmd"]) {
        if (!arg.is_string())
            throw Error(ErrorCode::ManifestParseError, std::string(which) + " hook arguments must be strings");
        auto s = arg.get<std::string>();
        for (const auto& name : placeholders_in(s))
            if (!allowed.contains(name))
                throw Error(ErrorCode::ManifestParseError,
                            "placeholder {" + name + "} is not available to the " + std::string(which) + " hook");
        t.argv.push_back(std::move(s));
    }
    fs::path exe = t.argv.front();
    if (exe.is_relative() && t.argv.front().find('/') != std::string::npos)
        t.argv.front() = (base_dir / exe).lexically_normal().string();
    return t;
}

std::map<std::string, std::string> placeholder_values(const BenchmarkDescriptor& benchmark, const BugCoordinate* bug,
                                                      const fs::path& workspace) {
    std::map<std::string, std::string> values = {{"workspace", workspace.string()},
                                                 {"benchmark", benchmark.name}};
    if (bug) {
        values["bug_id"] = bug->bug_id;
        values["project"] = bug->project;
    }
    return values;
}

HookReport run_hook(const HookTemplate& hook, const std::map<std::string, std::string>& values,
                    const fs::path& cwd, const HookOptions& options) {
    ProcessSpec spec;
    for (const auto& arg : hook.argv) spec.argv.push_back(expand_placeholders(arg, values));
    spec.working_directory = cwd;
    HookReport report;
    auto sink = [&](Stream stream, std::string_view line) {
        auto& text = stream == Stream::Stdout ? report.stdout_text : report.stderr_text;
        text.append(line);
        text.push_back('\n');
        if (options.sink) options.sink(stream, line);
    };
    report.termination = run_process(spec, options.allowance, options.grace, sink);
    return report;
}

std::string describe_failure(std::string_view which, const HookReport& report) {
    std::ostringstream out;
    out << which << " hook ";
    const auto& t = report.termination;
    if (t.terminated_by_watchdog)
        out << "exceeded its time allowance";
    else if (t.signal)
        out << "killed by signal " << *t.signal;
    else
        out << "exited with status " << t.exit_code.value_or(-1);
    std::string err = report.stderr_text;
    if (err.size() > 4000) err = err.substr(err.size() - 4000);
    while (!err.empty() && err.back() == '\n') err.pop_back();
    if (!err.empty()) out << ": " << err;
    return out.str();
}

bool directory_empty_or_absent(const fs::path& p) {
    std::error_code ec;
    if (!fs::exists(p, ec)) return true;
    return fs::is_directory(p, ec) && fs::directory_iterator(p, ec) == fs::directory_iterator();
}

bool glob_match(const std::string& pattern, const std::string& text) {
    return ::fnmatch(pattern.c_str(), text.c_str(), 0) == 0;
}

fs::path resolve(const fs::path& workspace, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : (workspace / path).lexically_normal();
}

AbstractParameterSet params_from_json(const Json& j, const fs::path& workspace) {
    auto string_field = [&](const char* key) {
        if (!j.contains(key)) throw Error(ErrorCode::InfoHookFailed, std::string("bug info lacks '") + key + "'");
        const Json& v = j[key];
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number()) return v.dump();
        throw Error(ErrorCode::InfoHookFailed, std::string("bug info field '") + key + "' must be a string");
    };
    auto list_field = [&](const char* key) {
        std::vector<std::string> out;
        if (!j.contains(key)) throw Error(ErrorCode::InfoHookFailed, std::string("bug info lacks '") + key + "'");
        const Json& v = j[key];
        if (v.is_string()) {
            if (!v.get<std::string>().empty()) out.push_back(v.get<std::string>());
        } else if (v.is_array()) {
            for (const auto& e : v) {
                if (!e.is_string())
                    throw Error(ErrorCode::InfoHookFailed, std::string("bug info field '") + key + "' must hold strings");
                out.push_back(e.get<std::string>());
            }
        } else {
            throw Error(ErrorCode::InfoHookFailed, std::string("bug info field '") + key + "' must be a list");
        }
        return out;
    };

    AbstractParameterSet params;
    params.source_path = resolve(workspace, string_field("source_path"));
    params.test_path = resolve(workspace, string_field("test_path"));
    params.source_binary_path = resolve(workspace, string_field("source_binary_path"));
    params.test_binary_path = resolve(workspace, string_field("test_binary_path"));
    for (const auto& entry : list_field("classpath")) params.classpath.push_back(resolve(workspace, entry));
    params.language_level = string_field("language_level");
    params.failing_test_identifiers = list_field("failing_test_identifiers");
    params.workspace = workspace;
    return params;
}

void validate_params(const AbstractParameterSet& params) {
    if (params.failing_test_identifiers.empty())
        throw Error(ErrorCode::MissingFailingTests, "bug info reports no failing test");
    auto check = [](const fs::path& p, std::string_view what) {
        std::error_code ec;
        if (!fs::exists(p, ec))
            throw Error(ErrorCode::PathNotFound, std::string(what) + " does not exist: " + p.string());
    };
    check(params.source_path, "source_path");
    check(params.test_path, "test_path");
    check(params.source_binary_path, "source_binary_path");
    check(params.test_binary_path, "test_binary_path");
    for (const auto& entry : params.classpath) check(entry, "classpath entry");
}

}  // namespace

const BugCoordinate* BenchmarkDescriptor::find_bug(std::string_view bug_id) const {
    for (const auto& bug : bugs)
        if (bug.bug_id == bug_id) return &bug;
    return nullptr;
}

std::string expand_placeholders(std::string_view text, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '{') {
            auto close = text.find('}', i);
            if (close != std::string_view::npos) {
                auto it = values.find(std::string(text.substr(i + 1, close - i - 1)));
                if (it != values.end()) {
                    out += it->second;
                    i = close;
                    continue;
                }
            }
        }
        out.push_back(text[i]);
    }
    return out;
}

Json to_json(const AbstractParameterSet& p) {
    Json classpath = Json::array();
    for (const auto& e : p.classpath) classpath.push_back(e.string());
    return {{"source_path", p.source_path.string()},
            {"test_path", p.test_path.string()},
            {"source_binary_path", p.source_binary_path.string()},
            {"test_binary_path", p.test_binary_path.string()},
            {"classpath", classpath},
            {"language_level", p.language_level},
            {"failing_test_identifiers", p.failing_test_identifiers}};
}

BenchmarkDescriptor parse_benchmark_manifest(const Json& m, const fs::path& base_dir) {
    if (!m.is_object()) throw Error(ErrorCode::ManifestParseError, "benchmark manifest must be a JSON object");
    BenchmarkDescriptor d;
    if (!m.contains("name") || !m["name"].is_string() || m["name"].get<std::string>().empty())
        throw Error(ErrorCode::ManifestParseError, "benchmark manifest needs a non-empty 'name'");
    d.name = m["name"].get<std::string>();
    if (d.name.find_first_of("/\\:") != std::string::npos)
        throw Error(ErrorCode::ManifestParseError, "benchmark name must not contain '/', '\\' or ':'");

    if (!m.contains("hooks") || !m["hooks"].is_object())
        throw Error(ErrorCode::ManifestMissingHook, "benchmark manifest has no 'hooks' object");
    const Json& hooks = m["hooks"];
    for (const char* which : {"checkout", "compile", "info"})
        if (!hooks.contains(which))
            throw Error(ErrorCode::ManifestMissingHook, std::string("benchmark '") + d.name + "' lacks the " + which +
                                                            " hook");
    // Compile works on a workspace alone, so it cannot see bug-level placeholders.
    d.checkout_hook = parse_hook(hooks["checkout"], "checkout", base_dir, kHookPlaceholders);
    d.compile_hook = parse_hook(hooks["compile"], "compile", base_dir, {"workspace", "benchmark"});
    d.info_hook = parse_hook(hooks["info"], "info", base_dir, kHookPlaceholders);

    if (!m.contains("bugs") || !m["bugs"].is_array())
        throw Error(ErrorCode::ManifestParseError, "benchmark manifest needs a 'bugs' array");
    std::set<std::string> seen;
    for (const auto& b : m["bugs"]) {
        if (!b.is_object() || !b.contains("id") || !b["id"].is_string())
            throw Error(ErrorCode::ManifestParseError, "each bug needs a string 'id'");
        BugCoordinate bug{d.name, b.value("project", ""), b["id"].get<std::string>()};
        validate_bug_id(bug.bug_id);
        if (!seen.insert(bug.bug_id).second)
            throw Error(ErrorCode::DuplicateBug, "bug '" + bug.bug_id + "' listed twice in " + d.name);
        d.bugs.push_back(std::move(bug));
    }
    if (d.bugs.empty()) throw Error(ErrorCode::EmptyBugList, "benchmark '" + d.name + "' lists no bugs");

    if (m.contains("metadata") && m["metadata"].is_object()) {
        const Json& md = m["metadata"];
        if (md.contains("projects") && md["projects"].is_number()) d.metadata.project_count = md["projects"].get<long>();
        if (md.contains("mean_loc") && md["mean_loc"].is_number()) d.metadata.mean_loc = md["mean_loc"].get<double>();
    }
    return d;
}

BenchmarkDescriptor load_benchmark_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ManifestParseError, "cannot read " + path.string());
    Json m;
    try {
        m = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::ManifestParseError, path.string() + ": " + e.what());
    }
    return parse_benchmark_manifest(m, fs::absolute(path).parent_path());
}

CheckoutReport checkout(const BenchmarkDescriptor& benchmark, const BugCoordinate& bug, const fs::path& dest,
                        const HookOptions& options) {
    const BugCoordinate* known = benchmark.find_bug(bug.bug_id);
    if (!known || (!bug.benchmark.empty() && bug.benchmark != benchmark.name))
        throw Error(ErrorCode::UnknownBug, bug.render() + " is not part of benchmark " + benchmark.name);
    if (!directory_empty_or_absent(dest)) throw Error(ErrorCode::DestNotEmpty, dest.string() + " is not empty");
    fs::create_directories(dest);
    fs::path workspace = fs::absolute(dest);
    auto report = run_hook(benchmark.checkout_hook, placeholder_values(benchmark, known, workspace), workspace, options);
    if (!report.termination.succeeded()) throw Error(ErrorCode::HookFailed, describe_failure("checkout", report));
    return report;
}

CompileReport compile(const BenchmarkDescriptor& benchmark, const fs::path& workspace, const HookOptions& options) {
    std::error_code ec;
    if (!fs::is_directory(workspace, ec) || directory_empty_or_absent(workspace))
        throw Error(ErrorCode::HookFailed, "compile hook: workspace missing sources (" + workspace.string() + ")");
    fs::path ws = fs::absolute(workspace);
    auto report = run_hook(benchmark.compile_hook, placeholder_values(benchmark, nullptr, ws), ws, options);
    if (!report.termination.succeeded()) throw Error(ErrorCode::HookFailed, describe_failure("compile", report));
    return report;
}

AbstractParameterSet bug_info(const BenchmarkDescriptor& benchmark, const BugCoordinate& bug,
                              const fs::path& workspace, const HookOptions& options) {
    const BugCoordinate* known = benchmark.find_bug(bug.bug_id);
    if (!known) throw Error(ErrorCode::UnknownBug, bug.render() + " is not part of benchmark " + benchmark.name);
    fs::path ws = fs::absolute(workspace);
    fs::path cache = ws / "bug_info.json";

    Json info;
    std::error_code ec;
    if (fs::exists(cache, ec)) {
        std::ifstream in(cache);
        try {
            info = Json::parse(in);
        } catch (const Json::parse_error& e) {
            throw Error(ErrorCode::InfoHookFailed, "corrupt cache " + cache.string() + ": " + e.what());
        }
    } else {
        auto report = run_hook(benchmark.info_hook, placeholder_values(benchmark, known, ws), ws, options);
        if (!report.termination.succeeded())
            throw Error(ErrorCode::InfoHookFailed, describe_failure("info", report));
        try {
            info = Json::parse(report.stdout_text);
        } catch (const Json::parse_error& e) {
            throw Error(ErrorCode::InfoHookFailed, std::string("info hook output is not JSON: ") + e.what());
        }
    }
    if (!info.is_object()) throw Error(ErrorCode::InfoHookFailed, "bug info must be a JSON object");

    AbstractParameterSet params = params_from_json(info, ws);
    validate_params(params);
    if (!fs::exists(cache, ec)) {
        std::ofstream out(cache);
        out << to_json(params).dump(2) << '\n';
    }
    return params;
}

std::vector<BugCoordinate> list_bugs(const BenchmarkDescriptor& benchmark, const BugFilter& filter) {
    std::vector<BugCoordinate> out;
    for (const auto& bug : benchmark.bugs) {
        if (filter.id_glob && !glob_match(*filter.id_glob, bug.bug_id)) continue;
        if (filter.project_glob && !glob_match(*filter.project_glob, bug.project)) continue;
        out.push_back(bug);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.bug_id < b.bug_id; });
    return out;
}

}  // namespace repairbench
