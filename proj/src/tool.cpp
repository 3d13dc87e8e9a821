#include "repairbench/tool.hpp"

#include <algorithm>
#include <fstream>
#include <cctype>

#include "repairbench/error.hpp"

namespace fs = std::filesystem;

namespace repairbench {

std::string_view to_string(ToolCategory category) {
    switch (category) {
        case ToolCategory::GenerateAndValidate: return "GENERATE_AND_VALIDATE";
        case ToolCategory::SemanticsDriven: return "SEMANTICS_DRIVEN";
        case ToolCategory::Metaprogramming: return "METAPROGRAMMING";
    }
    return "?";
}

namespace {

bool is_abstract_name(std::string_view name) {
    return std::find(kAbstractParameterNames.begin(), kAbstractParameterNames.end(), name) !=
           kAbstractParameterNames.end();
}

ToolCategory parse_category(const std::string& s) {
    for (auto c : {ToolCategory::GenerateAndValidate, ToolCategory::SemanticsDriven, ToolCategory::Metaprogramming})
        if (to_string(c) == s) return c;
    throw Error(ErrorCode::ManifestParseError, "unknown tool category '" + s + "'");
}

RenderRule parse_rule(const std::string& name, const Json& j) {
    if (!j.is_object() || !j.contains("flag") || !j["flag"].is_string())
        throw Error(ErrorCode::ManifestParseError, "mapping for '" + name + "' needs a string 'flag' or \"UNUSED\"");
    RenderRule rule;
    rule.flag = j["flag"].get<std::string>();
    std::string style = j.value("style", "separate");
    if (style == "separate")
        rule.style = FlagStyle::Separate;
    else if (style == "joined")
        rule.style = FlagStyle::Joined;
    else if (style == "positional")
        rule.style = FlagStyle::Positional;
    else
        throw Error(ErrorCode::ManifestParseError, "unknown style '" + style + "' for '" + name + "'");
    std::string list = j.value("list", "join");
    if (list == "join")
        rule.list_mode = ListMode::Join;
    else if (list == "repeat")
        rule.list_mode = ListMode::Repeat;
    else if (list == "scalar")
        rule.list_mode = ListMode::Scalar;
    else
        throw Error(ErrorCode::ManifestParseError, "unknown list mode '" + list + "' for '" + name + "'");
    if (j.contains("separator")) rule.separator = j["separator"].get<std::string>();
    if (rule.style != FlagStyle::Positional && rule.flag.empty())
        throw Error(ErrorCode::ManifestParseError, "empty flag for '" + name + "'");
    return rule;
}

std::map<std::string, std::string> string_map(const Json& j, const char* what) {
    std::map<std::string, std::string> out;
    if (j.is_null()) return out;
    if (!j.is_object()) throw Error(ErrorCode::ManifestParseError, std::string(what) + " must be an object");
    for (const auto& [k, v] : j.items()) {
        if (v.is_string())
            out[k] = v.get<std::string>();
        else if (v.is_number() || v.is_boolean())
            out[k] = v.dump();
        else
            throw Error(ErrorCode::ManifestParseError, std::string(what) + "." + k + " must be a scalar");
    }
    return out;
}

std::vector<std::string> values_of(std::string_view name, const AbstractParameterSet& p) {
    if (name == "source_path") return {p.source_path.string()};
    if (name == "test_path") return {p.test_path.string()};
    if (name == "source_binary_path") return {p.source_binary_path.string()};
    if (name == "test_binary_path") return {p.test_binary_path.string()};
    if (name == "language_level") return {p.language_level};
    if (name == "workspace") return {p.workspace.string()};
    if (name == "failing_test_identifiers") return p.failing_test_identifiers;
    std::vector<std::string> out;
    for (const auto& e : p.classpath) out.push_back(e.string());
    return out;
}

bool is_list(std::string_view name) { return name == "classpath" || name == "failing_test_identifiers"; }

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

void render(const RenderRule& rule, const std::string& value, std::vector<std::string>& out) {
    switch (rule.style) {
        case FlagStyle::Separate:
            out.push_back(rule.flag);
            out.push_back(value);
            break;
        case FlagStyle::Joined: out.push_back(rule.flag + "=" + value); break;
        case FlagStyle::Positional: out.push_back(value); break;
    }
}

// First `{identifier}` in `s`, or empty.
std::string find_placeholder(std::string_view s) {
    for (auto open = s.find('{'); open != std::string_view::npos; open = s.find('{', open + 1)) {
        std::size_t i = open + 1;
        if (i >= s.size() || !(std::isalpha(static_cast<unsigned char>(s[i])) || s[i] == '_')) continue;
        while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
        if (i < s.size() && s[i] == '}') return std::string(s.substr(open, i - open + 1));
    }
    return {};
}

}  // namespace

ToolDescriptor parse_tool_manifest(const Json& m, const fs::path& base_dir) {
    if (!m.is_object()) throw Error(ErrorCode::ManifestParseError, "tool manifest must be a JSON object");
    ToolDescriptor t;
    try {
        t.name = m.at("name").get<std::string>();
        if (t.name.empty() || t.name.find_first_of("/\\:") != std::string::npos)
            throw Error(ErrorCode::ManifestParseError, "tool name must be non-empty without '/', '\\' or ':'");
        if (m.contains("family") && !m["family"].is_null()) t.family = m["family"].get<std::string>();
        t.category = parse_category(m.value("category", "GENERATE_AND_VALIDATE"));

        const Json& exe = m.at("executable");
        if (exe.is_string())
            t.executable = {exe.get<std::string>()};
        else
            t.executable = exe.get<std::vector<std::string>>();
        if (t.executable.empty() || t.executable.front().empty())
            throw Error(ErrorCode::ManifestParseError, "tool '" + t.name + "' has an empty executable");
        fs::path program = t.executable.front();
        if (program.is_relative() && t.executable.front().find('/') != std::string::npos)
            t.executable.front() = (base_dir / program).lexically_normal().string();

        const Json& pmap = m.at("parameter_map");
        if (!pmap.is_object()) throw Error(ErrorCode::ManifestParseError, "parameter_map must be an object");
        for (const auto& [name, rule] : pmap.items()) {
            if (!is_abstract_name(name))
                throw Error(ErrorCode::UnknownAbstractParam, "tool '" + t.name + "' maps unknown parameter '" + name + "'");
            if (rule.is_string() && rule.get<std::string>() == "UNUSED")
                t.parameter_map[name] = std::nullopt;
            else
                t.parameter_map[name] = parse_rule(name, rule);
        }
        for (auto name : kAbstractParameterNames)
            if (!t.parameter_map.contains(std::string(name)))
                throw Error(ErrorCode::UnmappedAbstractParam, "tool '" + t.name + "' neither maps nor marks UNUSED '" +
                                                                  std::string(name) + "'");

        t.extra_params = string_map(m.value("extra_params", Json()), "extra_params");
        t.environment = string_map(m.value("environment", Json()), "environment");
        t.supports_stop_on_first_patch = m.value("supports_stop_on_first_patch", false);
        t.supports_seed = m.value("supports_seed", false);
        if (m.contains("seed_flag") && !m["seed_flag"].is_null()) t.seed_flag = m["seed_flag"].get<std::string>();
        if (m.contains("patch_limit_flag") && !m["patch_limit_flag"].is_null())
            t.patch_limit_flag = m["patch_limit_flag"].get<std::string>();
        t.version_pin = m.value("version_pin", "");
        if (t.version_pin.empty())
            throw Error(ErrorCode::ManifestParseError, "tool '" + t.name + "' needs a non-empty version_pin");
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ManifestParseError, std::string("tool manifest: ") + e.what());
    }
    return t;
}

ToolDescriptor load_tool_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ManifestParseError, "cannot read " + path.string());
    Json m;
    try {
        m = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::ManifestParseError, path.string() + ": " + e.what());
    }
    return parse_tool_manifest(m, fs::absolute(path).parent_path());
}

ConcreteArgumentList map_parameters(const ToolDescriptor& tool, const AbstractParameterSet& params,
                                    const ParameterOverrides& overrides) {
    ConcreteArgumentList out;
    std::map<std::string, std::string> rendered_values;

    for (auto name_view : kAbstractParameterNames) {
        std::string name(name_view);
        auto values = values_of(name, params);
        std::string default_sep = name == "classpath" ? ":" : ",";
        rendered_values[name] = join(values, default_sep);

        auto it = tool.parameter_map.find(name);
        if (it == tool.parameter_map.end())
            throw Error(ErrorCode::UnmappedAbstractParam, "tool '" + tool.name + "' has no mapping for '" + name + "'");
        if (!it->second) continue;
        const RenderRule& rule = *it->second;

        if (!is_list(name)) {
            render(rule, values.front(), out.argv);
            continue;
        }
        switch (rule.list_mode) {
            case ListMode::Join:
                render(rule, join(values, rule.separator.value_or(default_sep)), out.argv);
                break;
            case ListMode::Repeat:
                for (const auto& v : values) render(rule, v, out.argv);
                break;
            case ListMode::Scalar:
                if (values.size() != 1)
                    throw Error(ErrorCode::RenderError, "'" + rule.flag + "' takes one value but " + name + " has " +
                                                            std::to_string(values.size()));
                render(rule, values.front(), out.argv);
                break;
        }
    }

    auto append_pair = [&](const std::string& key, const std::string& value) {
        out.argv.push_back(expand_placeholders(key, rendered_values));
        if (!value.empty()) out.argv.push_back(expand_placeholders(value, rendered_values));
    };
    for (const auto& [k, v] : tool.extra_params) append_pair(k, v);
    for (const auto& [k, v] : overrides) append_pair(k, v);

    for (const auto& frag : out.argv)
        if (auto p = find_placeholder(frag); !p.empty())
            throw Error(ErrorCode::RenderError, "unexpanded placeholder " + p + " in argument '" + frag + "'");

    out.environment = tool.environment;
    for (const auto& s : tool.executable) out.estimated_length += s.size() + 1;
    for (const auto& s : out.argv) out.estimated_length += s.size() + 1;
    return out;
}

CommandSpec build_command(const ToolDescriptor& tool, const ConcreteArgumentList& args, const fs::path& workspace,
                          const fs::path& capture_dir, std::size_t length_limit) {
    std::error_code ec;
    if (!fs::is_directory(workspace, ec))
        throw Error(ErrorCode::PathNotFound, "workspace does not exist: " + workspace.string());
    if (args.estimated_length > length_limit)
        throw Error(ErrorCode::CommandTooLong, "Argument list too long: command for " + tool.name + " needs " +
                                                   std::to_string(args.estimated_length) + " bytes, limit is " +
                                                   std::to_string(length_limit));
    CommandSpec spec;
    spec.argv = tool.executable;
    spec.argv.insert(spec.argv.end(), args.argv.begin(), args.argv.end());
    spec.environment = args.environment;
    spec.working_directory = workspace;
    fs::path dir = capture_dir.empty() ? workspace.parent_path() : capture_dir;
    spec.stdout_path = dir / "tool.stdout";
    spec.stderr_path = dir / "tool.stderr";
    return spec;
}

}  // namespace repairbench
