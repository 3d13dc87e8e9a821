#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "repairbench/runner.hpp"

namespace repairbench::cli {

enum class Subcommand { Repair, Campaign, Analyze, Classify, List };

struct Context {
    /// Holds `tools/` and `benchmarks/` manifest directories.
    std::filesystem::path default_plugin_dir;
};

/// Attempt settings shared by `repair` and `campaign`.
struct AttemptFlags {
    std::chrono::milliseconds budget = std::chrono::hours(2);
    std::chrono::milliseconds grace = std::chrono::seconds(30);
    std::chrono::milliseconds setup_allowance = std::chrono::minutes(15);
    std::int64_t seed = 0;
    int patch_limit = 1;
    bool keep_workspace = false;
    std::size_t command_limit = kDefaultCommandLengthLimit;
    /// `KEY=VALUE` tool parameter overrides.
    std::vector<std::string> params;

    AttemptConfig to_config() const;
};

struct Invocation {
    Subcommand subcommand = Subcommand::List;

    std::filesystem::path tools_dir;
    std::filesystem::path benchmarks_dir;
    std::filesystem::path root = "results";
    bool json = false;

    // repair
    std::string tool;
    std::string benchmark;
    std::string bug_id;

    // campaign
    std::vector<std::string> tools;
    std::vector<std::string> benchmarks;
    std::string filter;
    std::string project_filter;
    unsigned parallelism = 1;
    bool resume = false;
    std::optional<std::size_t> stop_after;

    AttemptFlags attempt;

    // analyze
    std::string format = "md";
    std::filesystem::path out;
    std::string reference = "Defects4J";
    double alpha = 0.05;

    // classify
    std::filesystem::path catalog;

    // list
    std::string what = "all";
};

/// Result of parsing: either an invocation to dispatch, or an exit code with
/// the text to print (help, usage errors).
struct Parsed {
    std::optional<Invocation> invocation;
    int exit_code = 0;
    std::string out_text;
    std::string err_text;
};

/// Parses `args` (without the program name). Precedence per setting is
/// command-line flag, then `--config` file, then environment
/// (`REPAIR_RESULTS_ROOT` for `--root`), then the built-in default.
Parsed parse(const std::vector<std::string>& args, const Context& context);

/// Exit code: 0 when the command completed (whatever the attempt outcomes),
/// 1 for bad input, 2 for framework faults.
int dispatch(const Invocation& invocation, std::ostream& out, std::ostream& err);

/// parse + dispatch.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Context& context);

/// Help text for one level ("" for the top level, or a subcommand name).
std::string help_text(const std::string& subcommand, const Context& context);

/// Long names (with leading dashes) of every flag accepted at that level, and
/// the names of positionals.
std::vector<std::string> accepted_flags(const std::string& subcommand, const Context& context);

/// `1500ms`, `30s`, `5m`, `2h`, or plain seconds. Throws INVALID_CONFIG.
std::chrono::milliseconds parse_duration(std::string_view text);

}  // namespace repairbench::cli
