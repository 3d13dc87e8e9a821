#include "repairbench/runner.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

#include "repairbench/diff.hpp"
#include "repairbench/error.hpp"
#include "repairbench/process.hpp"

namespace fs = std::filesystem;

namespace repairbench {

void AttemptConfig::validate() const {
    if (budget.count() <= 0) throw Error(ErrorCode::InvalidConfig, "budget must be positive");
    if (patch_limit < 1) throw Error(ErrorCode::InvalidConfig, "patch_limit must be at least 1");
    if (grace.count() < 0) throw Error(ErrorCode::InvalidConfig, "grace period must not be negative");
    if (setup_allowance.count() <= 0) throw Error(ErrorCode::InvalidConfig, "setup allowance must be positive");
}

Json to_json(const NormalizedResult& r) {
    Json patches = Json::array();
    for (const auto& p : r.patches) patches.push_back({{"file", p.file}, {"diff", p.diff}});
    return {{"schema_version", r.schema_version},
            {"tool", r.tool},
            {"benchmark", r.benchmark},
            {"bug_id", r.bug_id},
            {"seed", r.seed},
            {"wall_time_seconds", r.wall_time_seconds},
            {"patches", patches}};
}

NormalizedResult result_from_json(const Json& j) {
    try {
        NormalizedResult r;
        r.schema_version = j.at("schema_version").get<int>();
        r.tool = j.at("tool").get<std::string>();
        r.benchmark = j.at("benchmark").get<std::string>();
        r.bug_id = j.at("bug_id").get<std::string>();
        r.seed = j.at("seed").get<std::int64_t>();
        r.wall_time_seconds = j.at("wall_time_seconds").get<double>();
        for (const auto& p : j.at("patches")) r.patches.push_back({p.at("file"), p.at("diff")});
        return r;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("results.json: ") + e.what());
    }
}

namespace {

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::optional<std::string> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

bool is_internal(const std::string& rel) { return rel == ".repair" || rel.starts_with(".repair/"); }

// Workspace-relative generic path for a tool-reported file, or nullopt when it
// points outside the workspace.
std::optional<std::string> confine(const fs::path& workspace, const std::string& reported) {
    if (reported.empty()) return std::nullopt;
    fs::path p(reported);
    fs::path rel = p.is_absolute() ? p.lexically_normal().lexically_relative(workspace.lexically_normal())
                                   : p.lexically_normal();
    if (rel.empty() || rel == ".") return std::nullopt;
    auto first = *rel.begin();
    if (first == ".." || rel.is_absolute()) return std::nullopt;
    // Symlinks inside the workspace may still lead out of it.
    std::error_code ec;
    auto canon_ws = fs::weakly_canonical(workspace, ec);
    auto canon = fs::weakly_canonical(workspace / rel, ec);
    if (!ec) {
        auto back = canon.lexically_relative(canon_ws);
        if (back.empty() || *back.begin() == "..") return std::nullopt;
    }
    return rel.generic_string();
}

const std::string& pristine_text(const WorkspaceSnapshot& pristine, const std::string& rel, const std::string& tool) {
    static const std::string empty;
    auto it = pristine.files.find(rel);
    if (it == pristine.files.end()) return empty;  // new file
    if (!it->second.content)
        throw Error(ErrorCode::UnparseableToolOutput,
                    tool + " patched " + rel + ", which is too large to have a pristine copy");
    return *it->second.content;
}

Patch make_patch(const std::string& rel, const std::string& before, const std::string& after) {
    Patch patch{rel, unified_diff(before, after, rel)};
    auto applied = apply_unified_diff(before, patch.diff);
    if (!applied || *applied != after)
        throw Error(ErrorCode::PatchDoesNotApply, "reconstructed diff for " + rel + " does not reproduce the patched file");
    return patch;
}

std::vector<Patch> from_manifest(const WorkspaceSnapshot& pristine, const ToolDescriptor& tool, const fs::path& workspace,
                                 const fs::path& manifest_path) {
    Json manifest;
    try {
        manifest = read_json_file(manifest_path);
    } catch (const Error& e) {
        throw Error(ErrorCode::UnparseableToolOutput, e.what());
    }
    if (!manifest.is_object() || !manifest.contains("patches") || !manifest["patches"].is_array())
        throw Error(ErrorCode::UnparseableToolOutput, std::string(kPatchManifest) + " needs a 'patches' array");

    std::vector<Patch> out;
    for (const auto& entry : manifest["patches"]) {
        if (!entry.is_object() || !entry.contains("file") || !entry["file"].is_string())
            throw Error(ErrorCode::UnparseableToolOutput, "patch entry without a 'file' string");
        auto reported = entry["file"].get<std::string>();
        auto rel = confine(workspace, reported);
        if (!rel) throw Error(ErrorCode::UnparseableToolOutput, "patch touches a file outside the workspace: " + reported);

        std::string after;
        if (entry.contains("content") && entry["content"].is_string()) {
            after = entry["content"].get<std::string>();
        } else if (entry.contains("content_path") && entry["content_path"].is_string()) {
            fs::path cp = entry["content_path"].get<std::string>();
            if (cp.is_relative()) cp = workspace / cp;
            auto text = slurp(cp);
            if (!text) throw Error(ErrorCode::UnparseableToolOutput, "cannot read patched content " + cp.string());
            after = std::move(*text);
        } else {
            throw Error(ErrorCode::UnparseableToolOutput, "patch for " + *rel + " has neither 'content' nor 'content_path'");
        }

        const auto& before = pristine_text(pristine, *rel, tool.name);
        if (before == after) continue;
        out.push_back(make_patch(*rel, before, after));
    }
    return out;
}

std::vector<Patch> from_workspace(const WorkspaceSnapshot& pristine, const ToolDescriptor& tool,
                                  const fs::path& workspace, const fs::path& source_root) {
    fs::path root = source_root.is_absolute() ? source_root : workspace / source_root;
    auto prefix_path = root.lexically_normal().lexically_relative(workspace.lexically_normal());
    if (prefix_path.empty() || *prefix_path.begin() == "..") return {};
    std::string prefix = prefix_path.generic_string();
    auto under_root = [&](const std::string& rel) {
        return prefix == "." || rel == prefix || rel.starts_with(prefix + "/");
    };

    std::map<std::string, std::optional<std::string>> current;  // rel -> content, nullopt when deleted
    std::error_code ec;
    if (fs::is_directory(root, ec)) {
        for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::recursive_directory_iterator();
             it.increment(ec)) {
            if (!it->is_regular_file()) continue;
            auto rel = it->path().lexically_relative(workspace).generic_string();
            if (is_internal(rel)) continue;
            current[rel] = slurp(it->path());
        }
    }
    for (const auto& [rel, file] : pristine.files)
        if (under_root(rel) && !current.contains(rel)) current[rel] = std::nullopt;

    std::vector<Patch> out;
    for (const auto& [rel, content] : current) {
        auto it = pristine.files.find(rel);
        std::string after = content.value_or("");
        if (it != pristine.files.end() && content && it->second.hash == fnv1a(after)) continue;
        if (it == pristine.files.end() && !content) continue;
        const auto& before = pristine_text(pristine, rel, tool.name);
        if (before == after) continue;
        out.push_back(make_patch(rel, before, after));
    }
    return out;
}

class AttemptLog {
public:
    explicit AttemptLog(const fs::path& path) : out_(path, std::ios::binary | std::ios::app) {
        if (!out_) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }

    void write(Phase phase, std::string_view stream, std::string_view text) {
        std::lock_guard lock(mutex_);
        out_ << iso8601_now() << " | " << to_string(phase) << " | " << stream << " | " << text << '\n';
        out_.flush();
    }

    OutputSink sink(Phase phase) {
        return [this, phase](Stream s, std::string_view line) { write(phase, to_string(s), line); };
    }

private:
    std::mutex mutex_;
    std::ofstream out_;
};

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string describe_exit(const TerminationInfo& t) {
    if (t.terminated_by_watchdog) return "terminated by watchdog after " + std::to_string(t.elapsed_seconds) + " s";
    if (t.signal) return "killed by signal " + std::to_string(*t.signal);
    if (t.exit_code) return "exit code " + std::to_string(*t.exit_code);
    return "unknown termination";
}

}  // namespace

WorkspaceSnapshot take_snapshot(const fs::path& workspace, std::uintmax_t max_content_bytes) {
    WorkspaceSnapshot snap;
    snap.root = workspace;
    std::error_code ec;
    for (auto it = fs::recursive_directory_iterator(workspace, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec)) {
        if (!it->is_regular_file()) continue;
        auto rel = it->path().lexically_relative(workspace).generic_string();
        auto text = slurp(it->path());
        if (!text) continue;
        WorkspaceSnapshot::File f;
        f.hash = fnv1a(*text);
        if (text->size() <= max_content_bytes) f.content = std::move(*text);
        snap.files.emplace(std::move(rel), std::move(f));
    }
    if (ec) throw Error(ErrorCode::IoError, "cannot scan workspace " + workspace.string() + ": " + ec.message());
    return snap;
}

std::vector<Patch> normalize_output(const WorkspaceSnapshot& pristine, const ToolDescriptor& tool,
                                    const fs::path& workspace, const fs::path& source_root) {
    auto manifest = workspace / kPatchManifest;
    std::error_code ec;
    if (fs::exists(manifest, ec)) return from_manifest(pristine, tool, workspace, manifest);
    return from_workspace(pristine, tool, workspace, source_root);
}

Outcome decide_outcome(const OutcomeInputs& in) {
    if (in.setup_failed) return Outcome::Error;
    if (in.valid_patches > 0) return Outcome::Patched;
    if (in.terminated_by_watchdog) return Outcome::Timeout;
    if (in.normalization_failed) return Outcome::Error;
    if (in.exit_code && *in.exit_code == 0 && !in.signal) return Outcome::NoPatch;
    return Outcome::Error;
}

fs::path attempt_directory(const fs::path& root, const std::string& tool, const std::string& benchmark,
                           const std::string& bug_id, std::int64_t seed) {
    return root / tool / benchmark / bug_id / std::to_string(seed);
}

AttemptRecord read_attempt(const fs::path& attempt_dir) {
    AttemptRecord r;
    try {
        r = attempt_from_json(read_json_file(attempt_dir / "attempt.json"));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        throw Error(ErrorCode::ManifestParseError, e.what());
    }
    r.attempt_dir = attempt_dir;
    return r;
}

AttemptRecord run_attempt(const ToolDescriptor& tool, const BenchmarkDescriptor& benchmark, const BugCoordinate& bug,
                          const AttemptConfig& config, const fs::path& results_root) {
    config.validate();
    const fs::path dir = attempt_directory(fs::absolute(results_root), tool.name, benchmark.name, bug.bug_id, config.seed);
    std::error_code ec;
    if (fs::exists(dir, ec) && !fs::is_empty(dir, ec))
        throw Error(ErrorCode::DestNotEmpty, "attempt directory is not empty: " + dir.string());
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

    AttemptLog log(dir / "repair.log");
    const auto started = std::chrono::steady_clock::now();

    AttemptRecord record;
    record.tool = tool.name;
    record.bug = bug;
    record.bug.benchmark = benchmark.name;
    record.seed = config.seed;
    record.start_time = iso8601_now();
    record.attempt_dir = dir;

    NormalizedResult result;
    result.tool = tool.name;
    result.benchmark = benchmark.name;
    result.bug_id = bug.bug_id;
    result.seed = config.seed;

    OutcomeInputs inputs;
    const fs::path workspace = dir / "workspace";
    Phase phase = Phase::Setup;
    log.write(phase, "runner", "attempt " + tool.name + " on " + record.bug.render() + " seed " +
                                   std::to_string(config.seed) + " (tool " + tool.version_pin + ")");

    auto fail_setup = [&](Phase at, const std::string& message) {
        inputs.setup_failed = true;
        record.failed_phase = at;
        record.diagnostic = message;
        log.write(at, "runner", "FAILED: " + message);
    };

    auto hook_options = [&](Phase at) {
        HookOptions o;
        o.allowance = config.setup_allowance;
        o.grace = config.grace;
        o.sink = log.sink(at);
        return o;
    };

    try {
        AbstractParameterSet params;
        auto timed = [&](Phase at, double& slot, auto&& body) {
            phase = at;
            auto t0 = std::chrono::steady_clock::now();
            try {
                body();
            } catch (const Error& e) {
                slot = seconds_since(t0);
                fail_setup(at, e.what());
                return false;
            }
            slot = seconds_since(t0);
            return true;
        };

        bool ok = timed(Phase::Checkout, record.durations.checkout,
                        [&] { checkout(benchmark, record.bug, workspace, hook_options(Phase::Checkout)); }) &&
                  timed(Phase::Compile, record.durations.compile,
                        [&] { compile(benchmark, workspace, hook_options(Phase::Compile)); }) &&
                  timed(Phase::Info, record.durations.info,
                        [&] { params = bug_info(benchmark, record.bug, workspace, hook_options(Phase::Info)); });

        std::optional<WorkspaceSnapshot> snapshot;
        std::optional<CommandSpec> command;
        if (ok) {
            phase = Phase::Launch;
            try {
                snapshot = take_snapshot(workspace);
                ParameterOverrides overrides;
                if (tool.supports_seed && tool.seed_flag)
                    overrides.emplace_back(*tool.seed_flag, std::to_string(config.seed));
                if (tool.supports_stop_on_first_patch && tool.patch_limit_flag)
                    overrides.emplace_back(*tool.patch_limit_flag, std::to_string(config.patch_limit));
                overrides.insert(overrides.end(), config.overrides.begin(), config.overrides.end());
                auto args = map_parameters(tool, params, overrides);
                command = build_command(tool, args, workspace, dir, config.command_length_limit);
            } catch (const Error& e) {
                fail_setup(Phase::Launch, e.what());
            }
        }

        if (command) {
            phase = Phase::Repair;
            std::string rendered;
            for (const auto& a : command->argv) rendered += (rendered.empty() ? "" : " ") + a;
            log.write(phase, "runner", "launch: " + rendered);

            std::ofstream tee_out(command->stdout_path, std::ios::binary);
            std::ofstream tee_err(command->stderr_path, std::ios::binary);
            auto to_log = log.sink(Phase::Repair);
            OutputSink sink = [&](Stream s, std::string_view line) {
                (s == Stream::Stdout ? tee_out : tee_err) << line << '\n';
                to_log(s, line);
            };

            std::optional<TerminationInfo> term;
            try {
                auto child = ChildProcess::spawn({command->argv, command->environment, command->working_directory});
                term = enforce_budget(child, config.budget, config.grace, sink);
            } catch (const Error& e) {
                fail_setup(Phase::Launch, e.what());
            }

            if (term) {
                record.durations.repair = term->elapsed_seconds;
                record.exit.code = term->exit_code;
                record.exit.signal = term->signal;
                record.exit.terminated_by_watchdog = term->terminated_by_watchdog;
                record.exit.orphan_survivor = term->orphan_survivor;
                inputs.exit_code = term->exit_code;
                inputs.signal = term->signal;
                inputs.terminated_by_watchdog = term->terminated_by_watchdog;
                log.write(Phase::Repair, "runner", "tool finished: " + describe_exit(*term));
                if (term->orphan_survivor)
                    log.write(Phase::Repair, "runner", "ORPHAN_SURVIVOR: a descendant outlived the force-kill");

                phase = Phase::Normalize;
                try {
                    result.patches = normalize_output(*snapshot, tool, workspace, params.source_path);
                } catch (const Error& e) {
                    inputs.normalization_failed = true;
                    record.failed_phase = Phase::Normalize;
                    record.diagnostic = e.what();
                    log.write(Phase::Normalize, "runner", std::string("FAILED: ") + e.what());
                }
                if (result.patches.size() > static_cast<std::size_t>(config.patch_limit)) {
                    log.write(Phase::Normalize, "runner",
                              "keeping " + std::to_string(config.patch_limit) + " of " +
                                  std::to_string(result.patches.size()) + " patches");
                    result.patches.resize(static_cast<std::size_t>(config.patch_limit));
                }
                inputs.valid_patches = result.patches.size();
                if (record.diagnostic.empty() && result.patches.empty() && !term->succeeded())
                    record.diagnostic = describe_exit(*term);
            }
        }
    } catch (const std::exception& e) {
        // Anything unexpected from the plumbing still ends as an ERROR attempt.
        fail_setup(phase, std::string("internal: ") + e.what());
        result.patches.clear();
        inputs.valid_patches = 0;
    }

    record.outcome = decide_outcome(inputs);
    record.patch_count = result.patches.size();
    result.wall_time_seconds = seconds_since(started);
    log.write(Phase::Normalize, "runner",
              std::string("outcome ") + std::string(to_string(record.outcome)) + ", " +
                  std::to_string(record.patch_count) + " patch(es)");

    if (!config.keep_workspace) {
        fs::remove_all(workspace, ec);
        if (ec) log.write(Phase::Normalize, "runner", "cannot remove workspace: " + ec.message());
    }

    write_json_file(dir / "results.json", to_json(result));
    record.end_time = iso8601_now();
    write_json_file(dir / "attempt.json", to_json(record));
    return record;
}

}  // namespace repairbench
