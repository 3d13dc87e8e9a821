#include "repairbench/cli.hpp"

#include <charconv>
#include <cmath>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "repairbench/analysis.hpp"
#include "repairbench/campaign.hpp"
#include "repairbench/classify.hpp"
#include "repairbench/error.hpp"

namespace fs = std::filesystem;

namespace repairbench::cli {

std::chrono::milliseconds parse_duration(std::string_view text) {
    auto bad = [&] { return Error(ErrorCode::InvalidConfig, "bad duration '" + std::string(text) + "'"); };
    std::size_t split = 0;
    while (split < text.size() && (std::isdigit(static_cast<unsigned char>(text[split])) || text[split] == '.')) ++split;
    if (split == 0) throw bad();
    double value = 0;
    try {
        std::size_t used = 0;
        value = std::stod(std::string(text.substr(0, split)), &used);
        if (used != split) throw bad();
    } catch (const std::invalid_argument&) {
        throw bad();
    }
    auto unit = text.substr(split);
    double ms;
    if (unit.empty() || unit == "s")
        ms = value * 1000;
    else if (unit == "ms")
        ms = value;
    else if (unit == "m" || unit == "min")
        ms = value * 60'000;
    else if (unit == "h")
        ms = value * 3'600'000;
    else
        throw bad();
    return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(ms)));
}

AttemptConfig AttemptFlags::to_config() const {
    AttemptConfig c;
    c.budget = budget;
    c.grace = grace;
    c.setup_allowance = setup_allowance;
    c.seed = seed;
    c.patch_limit = patch_limit;
    c.keep_workspace = keep_workspace;
    c.command_length_limit = command_limit;
    for (const auto& p : params) {
        auto eq = p.find('=');
        if (eq == std::string::npos)
            c.overrides.emplace_back(p, "");
        else
            c.overrides.emplace_back(p.substr(0, eq), p.substr(eq + 1));
    }
    c.validate();
    return c;
}

namespace {

// Reads `--config` files: top-level keys are global flags, nested objects
// named after a subcommand hold that subcommand's flags. `_` in keys stands
// for `-`.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        return dump(app, default_also).dump(2) + "\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        Json j;
        try {
            j = Json::parse(input);
        } catch (const Json::parse_error& e) {
            throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> items;
        collect(j, {}, items);
        return items;
    }

private:
    static void collect(const Json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
        for (const auto& [key, value] : j.items()) {
            std::string name = key;
            for (auto& c : name)
                if (c == '_') c = '-';
            if (value.is_object()) {
                auto p = parents;
                p.push_back(name);
                collect(value, p, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = name;
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            } else {
                item.inputs.push_back(value.is_string() ? value.get<std::string>() : value.dump());
            }
            out.push_back(std::move(item));
        }
    }

    static Json dump(const CLI::App* app, bool default_also) {
        Json j = Json::object();
        for (const auto* opt : app->get_options()) {
            if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
            auto values = opt->results();
            if (values.empty() && default_also && !opt->get_default_str().empty()) values = {opt->get_default_str()};
            if (values.empty()) continue;
            auto name = opt->get_lnames().front();
            for (auto& c : name)
                if (c == '-') c = '_';
            j[name] = values.size() == 1 ? Json(values.front()) : Json(values);
        }
        for (const auto* sub : app->get_subcommands({})) {
            auto nested = dump(sub, default_also);
            if (!nested.empty()) j[sub->get_name()] = nested;
        }
        return j;
    }
};

struct RawDurations {
    std::string budget = "2h";
    std::string grace = "30s";
    std::string setup_allowance = "15m";
};

const CLI::Validator& duration_check() {
    static const CLI::Validator v(
        [](std::string& s) -> std::string {
            try {
                parse_duration(s);
                return {};
            } catch (const Error& e) {
                return e.what();
            }
        },
        "DURATION");
    return v;
}

struct AppBundle {
    std::unique_ptr<CLI::App> app;
    CLI::App* repair = nullptr;
    CLI::App* campaign = nullptr;
    CLI::App* analyze = nullptr;
    CLI::App* classify = nullptr;
    CLI::App* list = nullptr;
};

void add_attempt_flags(CLI::App* sub, AttemptFlags& flags, RawDurations& raw) {
    sub->add_option("--budget", raw.budget, "Repair budget per attempt (e.g. 2h, 30s, 1500ms)")
        ->capture_default_str()
        ->check(duration_check());
    sub->add_option("--grace", raw.grace, "Wait between the polite stop and the force-kill")
        ->capture_default_str()
        ->check(duration_check());
    sub->add_option("--setup-allowance", raw.setup_allowance, "Allowance for each of checkout, compile and info")
        ->capture_default_str()
        ->check(duration_check());
    sub->add_option("--seed", flags.seed, "Random seed handed to tools that accept one")->capture_default_str();
    sub->add_option("--patch-limit", flags.patch_limit, "Patches kept per attempt")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_flag("--keep-workspace", flags.keep_workspace, "Keep the checked-out workspace after the attempt");
    sub->add_option("--command-limit", flags.command_limit, "Maximum bytes of a rendered tool command")
        ->capture_default_str();
    sub->add_option("--param", flags.params, "Extra tool argument KEY=VALUE (repeatable)");
}

AppBundle make_app(Invocation& inv, RawDurations& raw, const Context& ctx) {
    AppBundle b;
    b.app = std::make_unique<CLI::App>("Runs program repair tools on bug benchmarks and analyses the results.",
                                       "repairbench");
    auto& app = *b.app;
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON file with flag values (nested objects per subcommand)");
    app.allow_config_extras(CLI::config_extras_mode::error);

    inv.tools_dir = ctx.default_plugin_dir / "tools";
    inv.benchmarks_dir = ctx.default_plugin_dir / "benchmarks";
    app.add_option("--tools-dir", inv.tools_dir, "Directory of tool manifests")->capture_default_str();
    app.add_option("--benchmarks-dir", inv.benchmarks_dir, "Directory of benchmark manifests")->capture_default_str();
    app.add_option("--root", inv.root, "Results directory")->envname("REPAIR_RESULTS_ROOT")->capture_default_str();
    app.add_flag("--json", inv.json, "Print machine-readable JSON lines");

    b.repair = app.add_subcommand("repair", "Run one tool on one bug");
    b.repair->add_option("tool", inv.tool, "Tool name")->required();
    b.repair->add_option("--benchmark", inv.benchmark, "Benchmark name")->required();
    b.repair->add_option("--id", inv.bug_id, "Bug id")->required();
    add_attempt_flags(b.repair, inv.attempt, raw);

    b.campaign = app.add_subcommand("campaign", "Run tools x bugs with bounded parallelism");
    b.campaign->add_option("--tools", inv.tools, "Tools to run (default: all)")->delimiter(',');
    b.campaign->add_option("--benchmarks", inv.benchmarks, "Benchmarks to use (default: all)")->delimiter(',');
    b.campaign->add_option("--filter", inv.filter, "Glob over bug ids");
    b.campaign->add_option("--project-filter", inv.project_filter, "Glob over project names");
    inv.parallelism = default_parallelism();
    b.campaign->add_option("--parallelism", inv.parallelism, "Concurrent attempts")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    b.campaign->add_flag("--resume", inv.resume, "Skip attempts that already completed");
    b.campaign->add_option("--stop-after", inv.stop_after, "Start at most this many attempts, then stop (fault injection)");
    add_attempt_flags(b.campaign, inv.attempt, raw);

    b.analyze = app.add_subcommand("analyze", "Compute repairability, overlap, Chi-square and rate tables");
    b.analyze->add_option("--format", inv.format, "Report format")
        ->capture_default_str()
        ->check(CLI::IsMember({"md", "markdown", "csv", "json"}));
    b.analyze->add_option("--out", inv.out, "Report directory (default: <root>/report)");
    b.analyze->add_option("--reference", inv.reference, "Reference benchmark of the overfitting test")
        ->capture_default_str();
    b.analyze->add_option("--alpha", inv.alpha, "Significance level")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));

    b.classify = app.add_subcommand("classify", "Assign failure causes to non-patched attempts");
    b.classify->add_option("--catalog", inv.catalog, "Cause catalog (default: built-in)");
    b.classify->add_option("--out", inv.out, "Report directory (default: <root>/causes)");

    b.list = app.add_subcommand("list", "List tools, benchmarks and bugs");
    b.list->add_option("what", inv.what, "tools, benchmarks, bugs or all")
        ->capture_default_str()
        ->check(CLI::IsMember({"tools", "benchmarks", "bugs", "all"}));
    b.list->add_option("--benchmark", inv.benchmark, "Only bugs of this benchmark");
    return b;
}

CLI::App* level(const AppBundle& b, const std::string& name) {
    if (name.empty()) return b.app.get();
    return b.app->get_subcommand(name);
}

}  // namespace

Parsed parse(const std::vector<std::string>& args, const Context& context) {
    Parsed result;
    Invocation inv;
    RawDurations raw;
    auto b = make_app(inv, raw, context);
    std::ostringstream out, err;
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        b.app->parse(reversed);
    } catch (const CLI::ParseError& e) {
        result.exit_code = b.app->exit(e, out, err) == 0 ? 0 : 1;
        if (result.exit_code != 0) {
            const CLI::App* failing = b.app.get();
            for (auto* sub : b.app->get_subcommands())
                if (sub->parsed()) failing = sub;
            err << '\n' << failing->help();
        }
        result.out_text = out.str();
        result.err_text = err.str();
        return result;
    }
    try {
        inv.attempt.budget = parse_duration(raw.budget);
        inv.attempt.grace = parse_duration(raw.grace);
        inv.attempt.setup_allowance = parse_duration(raw.setup_allowance);
    } catch (const Error& e) {
        result.exit_code = 1;
        result.err_text = std::string(e.what()) + "\n";
        return result;
    }
    if (b.repair->parsed())
        inv.subcommand = Subcommand::Repair;
    else if (b.campaign->parsed())
        inv.subcommand = Subcommand::Campaign;
    else if (b.analyze->parsed())
        inv.subcommand = Subcommand::Analyze;
    else if (b.classify->parsed())
        inv.subcommand = Subcommand::Classify;
    else
        inv.subcommand = Subcommand::List;
    result.invocation = std::move(inv);
    return result;
}

std::string help_text(const std::string& subcommand, const Context& context) {
    Invocation inv;
    RawDurations raw;
    auto b = make_app(inv, raw, context);
    auto* app = level(b, subcommand);
    return app->help();
}

std::vector<std::string> accepted_flags(const std::string& subcommand, const Context& context) {
    Invocation inv;
    RawDurations raw;
    auto b = make_app(inv, raw, context);
    std::vector<std::string> out;
    for (const auto* opt : level(b, subcommand)->get_options()) {
        if (opt->get_positional())
            out.push_back(opt->get_name());
        for (const auto& l : opt->get_lnames()) out.push_back("--" + l);
    }
    return out;
}

namespace {

template <typename T>
std::map<std::string, T> load_dir(const fs::path& dir, T (*loader)(const fs::path&), std::ostream& err) {
    std::map<std::string, T> out;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir, ec))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        try {
            auto d = loader(f);
            auto name = d.name;
            out.emplace(std::move(name), std::move(d));
        } catch (const Error& e) {
            err << "warning: skipping " << f.string() << ": " << e.what() << '\n';
        }
    }
    return out;
}

std::map<std::string, ToolDescriptor> load_tools(const Invocation& inv, std::ostream& err) {
    return load_dir<ToolDescriptor>(inv.tools_dir, &load_tool_manifest, err);
}

std::map<std::string, BenchmarkDescriptor> load_benchmarks(const Invocation& inv, std::ostream& err) {
    return load_dir<BenchmarkDescriptor>(inv.benchmarks_dir, &load_benchmark_manifest, err);
}

// Bad user input (exit 1) as opposed to a framework fault (exit 2).
bool is_input_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidConfig:
        case ErrorCode::UnknownBug:
        case ErrorCode::UnknownBenchmark:
        case ErrorCode::MalformedId:
        case ErrorCode::EmptyPlan:
        case ErrorCode::InvalidCatalog:
        case ErrorCode::UndeclaredReference:
            return true;
        default:
            return false;
    }
}

Json record_line(const AttemptRecord& r) {
    Json j = to_json(r);
    j["attempt_dir"] = r.attempt_dir.string();
    return j;
}

std::string record_text(const AttemptRecord& r) {
    std::string s = r.tool + " " + r.bug.render() + " seed " + std::to_string(r.seed) + ": " +
                    std::string(to_string(r.outcome));
    if (r.patch_count) s += " (" + std::to_string(r.patch_count) + " patch" + (r.patch_count > 1 ? "es" : "") + ")";
    if (!r.diagnostic.empty() && r.outcome != Outcome::Patched) s += " - " + r.diagnostic;
    return s;
}

int do_repair(const Invocation& inv, std::ostream& out, std::ostream& err) {
    auto tools = load_tools(inv, err);
    auto benchmarks = load_benchmarks(inv, err);
    auto t = tools.find(inv.tool);
    if (t == tools.end()) throw Error(ErrorCode::InvalidConfig, "unknown tool '" + inv.tool + "'");
    auto b = benchmarks.find(inv.benchmark);
    if (b == benchmarks.end()) throw Error(ErrorCode::UnknownBenchmark, "unknown benchmark '" + inv.benchmark + "'");
    validate_bug_id(inv.bug_id);
    const auto* bug = b->second.find_bug(inv.bug_id);
    if (!bug) throw Error(ErrorCode::UnknownBug, "no bug '" + inv.bug_id + "' in " + inv.benchmark);

    auto record = run_attempt(t->second, b->second, *bug, inv.attempt.to_config(), inv.root);
    if (inv.json)
        out << record_line(record).dump() << '\n';
    else
        out << record_text(record) << "\n  " << record.attempt_dir.string() << '\n';
    return 0;
}

template <typename Map>
auto select(const Map& all, const std::vector<std::string>& names, const char* what) {
    std::vector<typename Map::mapped_type> out;
    if (names.empty()) {
        for (const auto& [_, d] : all) out.push_back(d);
        return out;
    }
    for (const auto& n : names) {
        auto it = all.find(n);
        if (it == all.end())
            throw Error(std::string(what) == "benchmark" ? ErrorCode::UnknownBenchmark : ErrorCode::InvalidConfig,
                        "unknown " + std::string(what) + " '" + n + "'");
        out.push_back(it->second);
    }
    return out;
}

int do_campaign(const Invocation& inv, std::ostream& out, std::ostream& err) {
    auto tools = select(load_tools(inv, err), inv.tools, "tool");
    auto benchmarks = select(load_benchmarks(inv, err), inv.benchmarks, "benchmark");
    BugFilter filter;
    if (!inv.filter.empty()) filter.id_glob = inv.filter;
    if (!inv.project_filter.empty()) filter.project_glob = inv.project_filter;
    auto plan = plan_campaign(std::move(tools), std::move(benchmarks), filter, inv.attempt.to_config(), inv.root);

    ExecuteOptions options;
    options.parallelism = inv.parallelism;
    options.resume = inv.resume;
    options.stop_after = inv.stop_after;
    std::size_t done = 0;
    const auto total = plan.entries.size();
    options.on_complete = [&](const AttemptRecord& r) {
        ++done;
        if (inv.json)
            out << record_line(r).dump() << '\n';
        else
            out << '[' << done << '/' << total << "] " << record_text(r) << '\n';
        out.flush();
    };
    auto summary = execute_campaign(plan, options);

    for (const auto& [key, message] : summary.failures)
        err << "not run: " << key.tool << ' ' << key.benchmark << ':' << key.bug_id << ": " << message << '\n';

    if (inv.json) {
        Json counts = Json::object();
        for (auto o : kAllOutcomes) counts[std::string(to_string(o))] = summary.counts[o];
        out << Json{{"summary",
                     {{"entries", total},
                      {"executed", summary.executed},
                      {"skipped", summary.skipped},
                      {"not_run", summary.not_run},
                      {"failures", summary.failures.size()},
                      {"counts", counts},
                      {"wall_time_seconds", summary.wall_time_seconds}}}}
                   .dump()
            << '\n';
    } else {
        out << "entries " << total << ", executed " << summary.executed << ", skipped " << summary.skipped;
        if (summary.not_run) out << ", not run " << summary.not_run;
        if (!summary.failures.empty()) out << ", failed " << summary.failures.size();
        out << '\n';
        for (auto o : kAllOutcomes) out << "  " << to_string(o) << ' ' << summary.counts[o] << '\n';
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.1f", summary.wall_time_seconds);
        out << "wall time " << buf << " s\n";
    }
    return summary.failures.empty() ? 0 : 2;
}

void report_malformed(const LoadedResults& loaded, std::ostream& err) {
    for (const auto& p : loaded.malformed) err << "warning: malformed attempt record " << p.string() << '\n';
}

void print_paths(const std::vector<fs::path>& paths, bool json, std::ostream& out) {
    for (const auto& p : paths) {
        if (json)
            out << Json{{"written", p.string()}}.dump() << '\n';
        else
            out << p.string() << '\n';
    }
}

int do_analyze(const Invocation& inv, std::ostream& out, std::ostream& err) {
    auto loaded = load_results(inv.root);
    report_malformed(loaded, err);
    auto sizes = benchmark_sizes(loaded.results);
    std::ostringstream ignored;
    for (const auto& [name, b] : load_benchmarks(inv, ignored))
        if (sizes.contains(name)) sizes[name] = b.bugs.size();
    auto bundle = analyze(loaded.results, sizes, inv.reference, inv.alpha);
    if (!loaded.results.empty() && bundle.overfit.empty())
        err << "note: reference benchmark '" << inv.reference << "' has no attempts; overfitting test skipped\n";
    auto dest = inv.out.empty() ? inv.root / "report" : inv.out;
    print_paths(emit_report(bundle, parse_report_format(inv.format), dest), inv.json, out);
    return 0;
}

int do_classify(const Invocation& inv, std::ostream& out, std::ostream& err) {
    auto loaded = load_results(inv.root);
    report_malformed(loaded, err);
    auto catalog = inv.catalog.empty() ? default_catalog() : load_catalog(inv.catalog);
    auto report = classify_results(loaded.results, catalog);
    auto dest = inv.out.empty() ? inv.root / "causes" : inv.out;
    auto paths = write_cause_report(report, dest);
    if (!inv.json) {
        std::map<FailureCause, std::size_t> totals;
        for (const auto& [_, c] : report.assignments) totals[c]++;
        for (auto c : kAllCauses) out << to_string(c) << ' ' << totals[c] << '\n';
    }
    print_paths(paths, inv.json, out);
    return 0;
}

int do_list(const Invocation& inv, std::ostream& out, std::ostream& err) {
    bool all = inv.what == "all";
    if (all || inv.what == "tools") {
        for (const auto& [name, t] : load_tools(inv, err)) {
            if (inv.json)
                out << Json{{"tool", name},
                            {"category", std::string(to_string(t.category))},
                            {"version", t.version_pin}}
                           .dump()
                    << '\n';
            else
                out << "tool " << name << " (" << to_string(t.category) << ", " << t.version_pin << ")\n";
        }
    }
    auto benchmarks = load_benchmarks(inv, err);
    if (!inv.benchmark.empty() && !benchmarks.contains(inv.benchmark))
        throw Error(ErrorCode::UnknownBenchmark, "unknown benchmark '" + inv.benchmark + "'");
    for (const auto& [name, b] : benchmarks) {
        if (!inv.benchmark.empty() && name != inv.benchmark) continue;
        if (all || inv.what == "benchmarks") {
            if (inv.json)
                out << Json{{"benchmark", name}, {"bugs", b.bugs.size()}}.dump() << '\n';
            else
                out << "benchmark " << name << " (" << b.bugs.size() << " bugs)\n";
        }
        if (all || inv.what == "bugs")
            for (const auto& bug : list_bugs(b)) {
                if (inv.json)
                    out << Json{{"benchmark", name}, {"project", bug.project}, {"bug_id", bug.bug_id}}.dump() << '\n';
                else
                    out << "  " << name << ':' << bug.bug_id << (bug.project.empty() ? "" : " [" + bug.project + "]")
                        << '\n';
            }
    }
    return 0;
}

}  // namespace

int dispatch(const Invocation& inv, std::ostream& out, std::ostream& err) {
    try {
        switch (inv.subcommand) {
            case Subcommand::Repair: return do_repair(inv, out, err);
            case Subcommand::Campaign: return do_campaign(inv, out, err);
            case Subcommand::Analyze: return do_analyze(inv, out, err);
            case Subcommand::Classify: return do_classify(inv, out, err);
            case Subcommand::List: return do_list(inv, out, err);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return is_input_error(e.code()) ? 1 : 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Context& context) {
    auto parsed = parse(args, context);
    out << parsed.out_text;
    err << parsed.err_text;
    if (!parsed.invocation) return parsed.exit_code;
    return dispatch(*parsed.invocation, out, err);
}

}  // namespace repairbench::cli
