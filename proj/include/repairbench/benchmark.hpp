#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repairbench/model.hpp"
#include "repairbench/process.hpp"

namespace repairbench {

/// External command with `{bug_id}`, `{workspace}`, `{project}` and
/// `{benchmark}` placeholders.
struct HookTemplate {
    std::vector<std::string> argv;
};

struct BenchmarkMetadata {
    std::optional<long> project_count;
    std::optional<double> mean_loc;
};

struct BenchmarkDescriptor {
    std::string name;
    std::vector<BugCoordinate> bugs;
    HookTemplate checkout_hook;
    HookTemplate compile_hook;
    HookTemplate info_hook;
    BenchmarkMetadata metadata;

    const BugCoordinate* find_bug(std::string_view bug_id) const;
};

/// The eight inputs every repair tool consumes. All but `workspace` come from
/// the benchmark's info hook.
struct AbstractParameterSet {
    std::filesystem::path source_path;
    std::filesystem::path test_path;
    std::filesystem::path source_binary_path;
    std::filesystem::path test_binary_path;
    std::vector<std::filesystem::path> classpath;
    std::string language_level;
    std::vector<std::string> failing_test_identifiers;
    std::filesystem::path workspace;
};

inline constexpr std::array<std::string_view, 8> kAbstractParameterNames = {
    "source_path", "test_path",      "source_binary_path",       "test_binary_path",
    "classpath",   "language_level", "failing_test_identifiers", "workspace"};

/// The seven benchmark-side fields, as stored in `bug_info.json`.
Json to_json(const AbstractParameterSet& params);

struct HookOptions {
    // Fixed allowance for setup phases; the repair budget does not cover them.
    std::chrono::milliseconds allowance = std::chrono::minutes(15);
    std::chrono::milliseconds grace = std::chrono::seconds(5);
    OutputSink sink;
};

struct HookReport {
    TerminationInfo termination;
    std::string stdout_text;
    std::string stderr_text;
};
using CheckoutReport = HookReport;
using CompileReport = HookReport;

/// Parses a manifest object; relative executables resolve against `base_dir`.
BenchmarkDescriptor parse_benchmark_manifest(const Json& manifest, const std::filesystem::path& base_dir);
BenchmarkDescriptor load_benchmark_manifest(const std::filesystem::path& path);

/// Runs the checkout hook into `dest`, which must be absent or empty.
CheckoutReport checkout(const BenchmarkDescriptor& benchmark, const BugCoordinate& bug,
                        const std::filesystem::path& dest, const HookOptions& options = {});

CompileReport compile(const BenchmarkDescriptor& benchmark, const std::filesystem::path& workspace,
                      const HookOptions& options = {});

/// Returns the seven benchmark-side parameters with `workspace` filled in.
/// The first successful call caches the hook output in
/// `<workspace>/bug_info.json`; later calls read the cache.
AbstractParameterSet bug_info(const BenchmarkDescriptor& benchmark, const BugCoordinate& bug,
                              const std::filesystem::path& workspace, const HookOptions& options = {});

struct BugFilter {
    std::optional<std::string> project_glob;
    std::optional<std::string> id_glob;
};

/// Bugs matching every given glob, ordered by id.
std::vector<BugCoordinate> list_bugs(const BenchmarkDescriptor& benchmark, const BugFilter& filter = {});

/// Substitutes `{name}` placeholders. Unknown names are left untouched.
std::string expand_placeholders(std::string_view text, const std::map<std::string, std::string>& values);

}  // namespace repairbench
