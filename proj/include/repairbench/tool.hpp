#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "repairbench/benchmark.hpp"
#include "repairbench/model.hpp"

namespace repairbench {

enum class ToolCategory { GenerateAndValidate, SemanticsDriven, Metaprogramming };

std::string_view to_string(ToolCategory category);

enum class FlagStyle {
    Separate,    // `flag value`
    Joined,      // `flag=value`
    Positional,  // `value`
};

/// How list-valued parameters (classpath, failing tests) are rendered.
enum class ListMode {
    Join,    // one argument, items joined by `separator`
    Repeat,  // the flag once per item
    Scalar,  // exactly one item allowed
};

struct RenderRule {
    std::string flag;
    FlagStyle style = FlagStyle::Separate;
    ListMode list_mode = ListMode::Join;
    /// Defaults to ':' for the classpath and ',' for other lists.
    std::optional<std::string> separator;
};

struct ToolDescriptor {
    std::string name;
    std::optional<std::string> family;
    ToolCategory category = ToolCategory::GenerateAndValidate;
    std::vector<std::string> executable;
    /// Every abstract parameter name; nullopt marks it UNUSED.
    std::map<std::string, std::optional<RenderRule>> parameter_map;
    /// Tool-specific flags not tied to an abstract parameter, in key order.
    std::map<std::string, std::string> extra_params;
    std::map<std::string, std::string> environment;
    bool supports_stop_on_first_patch = false;
    bool supports_seed = false;
    std::optional<std::string> seed_flag;
    std::optional<std::string> patch_limit_flag;
    std::string version_pin;
};

using ParameterOverrides = std::vector<std::pair<std::string, std::string>>;

struct ConcreteArgumentList {
    /// Arguments after the executable.
    std::vector<std::string> argv;
    std::map<std::string, std::string> environment;
    /// Bytes the kernel needs for executable + argv, counting one NUL per string.
    std::size_t estimated_length = 0;
};

struct CommandSpec {
    std::vector<std::string> argv;
    std::map<std::string, std::string> environment;
    std::filesystem::path working_directory;
    std::filesystem::path stdout_path;
    std::filesystem::path stderr_path;
};

inline constexpr std::size_t kDefaultCommandLengthLimit = 128 * 1024;

ToolDescriptor parse_tool_manifest(const Json& manifest, const std::filesystem::path& base_dir);
ToolDescriptor load_tool_manifest(const std::filesystem::path& path);

/// Renders the abstract parameters in canonical order, then the manifest's
/// extra parameters, then `overrides`. `{<abstract name>}` inside extra or
/// override values expands to that parameter's rendered value.
ConcreteArgumentList map_parameters(const ToolDescriptor& tool, const AbstractParameterSet& params,
                                    const ParameterOverrides& overrides = {});

/// Throws COMMAND_TOO_LONG when the rendered command exceeds `length_limit`.
CommandSpec build_command(const ToolDescriptor& tool, const ConcreteArgumentList& args,
                          const std::filesystem::path& workspace, const std::filesystem::path& capture_dir = {},
                          std::size_t length_limit = kDefaultCommandLengthLimit);

}  // namespace repairbench
