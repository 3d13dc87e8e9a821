#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "repairbench/benchmark.hpp"
#include "repairbench/model.hpp"
#include "repairbench/tool.hpp"

namespace repairbench {

struct AttemptConfig {
    /// Covers the tool phase only.
    std::chrono::milliseconds budget = std::chrono::hours(2);
    int patch_limit = 1;
    std::int64_t seed = 0;
    /// Between the polite stop and the force-kill.
    std::chrono::milliseconds grace = std::chrono::seconds(30);
    /// Separate allowance for each of checkout, compile and info.
    std::chrono::milliseconds setup_allowance = std::chrono::minutes(15);
    std::size_t command_length_limit = kDefaultCommandLengthLimit;
    bool keep_workspace = false;
    ParameterOverrides overrides;

    /// Throws INVALID_CONFIG unless budget > 0, patch_limit >= 1, grace >= 0.
    void validate() const;
};

struct Patch {
    /// Workspace-relative, forward slashes.
    std::string file;
    /// Unified diff against the buggy version, 3 context lines.
    std::string diff;

    bool operator==(const Patch&) const = default;
};

/// Contents of `results.json`.
struct NormalizedResult {
    int schema_version = kSchemaVersion;
    std::string tool;
    std::string benchmark;
    std::string bug_id;
    std::int64_t seed = 0;
    double wall_time_seconds = 0;
    std::vector<Patch> patches;
};

Json to_json(const NormalizedResult& result);
NormalizedResult result_from_json(const Json& json);

/// Ground state of a workspace taken before the tool runs: a content hash of
/// every file, plus the text of every file small enough to diff against.
struct WorkspaceSnapshot {
    struct File {
        std::uint64_t hash = 0;
        std::optional<std::string> content;
    };
    std::filesystem::path root;
    std::map<std::string, File> files;  // keyed by generic relative path
};

WorkspaceSnapshot take_snapshot(const std::filesystem::path& workspace,
                                std::uintmax_t max_content_bytes = 4 * 1024 * 1024);

/// Where tools report patches: `<workspace>/.repair/patches.json`, holding
/// `{"patches": [{"file": <relative path>, "content" | "content_path": ...}]}`.
inline constexpr const char* kPatchManifest = ".repair/patches.json";

/// Converts the tool's patches into unified diffs against `pristine`. Tools
/// either write the patch manifest or edit files in place; in-place edits are
/// only picked up under `source_root`.
/// Throws UNPARSEABLE_TOOL_OUTPUT or PATCH_DOES_NOT_APPLY.
std::vector<Patch> normalize_output(const WorkspaceSnapshot& pristine, const ToolDescriptor& tool,
                                    const std::filesystem::path& workspace,
                                    const std::filesystem::path& source_root);

/// Everything the outcome depends on.
struct OutcomeInputs {
    /// Checkout, compile, info or launch failed; the tool never ran.
    bool setup_failed = false;
    std::optional<int> exit_code;
    std::optional<int> signal;
    bool terminated_by_watchdog = false;
    std::size_t valid_patches = 0;
    bool normalization_failed = false;
};

/// The outcome decision table:
///   setup failure                        -> ERROR
///   >= 1 valid patch (any exit path)     -> PATCHED
///   watchdog kill                        -> TIMEOUT
///   unusable tool output                 -> ERROR
///   exit 0                               -> NO_PATCH
///   nonzero exit or signal               -> ERROR
Outcome decide_outcome(const OutcomeInputs& inputs);

/// `<root>/<tool>/<benchmark>/<bug_id>/<seed>`
std::filesystem::path attempt_directory(const std::filesystem::path& root, const std::string& tool,
                                        const std::string& benchmark, const std::string& bug_id,
                                        std::int64_t seed);

/// Runs one attempt end to end and leaves `repair.log`, `results.json` and
/// `attempt.json` (written last) in the attempt directory. Tool and benchmark
/// misbehaviour never escapes as an exception; it is folded into the outcome.
/// Throws only when the attempt directory itself is unusable (DEST_NOT_EMPTY,
/// IO_ERROR).
AttemptRecord run_attempt(const ToolDescriptor& tool, const BenchmarkDescriptor& benchmark, const BugCoordinate& bug,
                          const AttemptConfig& config, const std::filesystem::path& results_root);

/// Reads `attempt.json` from an attempt directory.
AttemptRecord read_attempt(const std::filesystem::path& attempt_dir);

}  // namespace repairbench
