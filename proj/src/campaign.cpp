#include "repairbench/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "repairbench/error.hpp"

namespace fs = std::filesystem;

namespace repairbench {

AttemptKey CampaignPlan::key(const Entry& e) const {
    return {tools.at(e.tool).name, benchmarks.at(e.benchmark).name, e.bug.bug_id, e.seed};
}

fs::path CampaignPlan::directory(const Entry& e) const {
    return attempt_directory(root, tools.at(e.tool).name, benchmarks.at(e.benchmark).name, e.bug.bug_id, e.seed);
}

CampaignPlan plan_campaign(std::vector<ToolDescriptor> tools, std::vector<BenchmarkDescriptor> benchmarks,
                           const BugFilter& filter, const AttemptConfig& config, fs::path root) {
    config.validate();
    std::sort(tools.begin(), tools.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    std::sort(benchmarks.begin(), benchmarks.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    for (std::size_t i = 1; i < tools.size(); ++i)
        if (tools[i].name == tools[i - 1].name)
            throw Error(ErrorCode::InvalidConfig, "tool '" + tools[i].name + "' selected twice");
    for (std::size_t i = 1; i < benchmarks.size(); ++i)
        if (benchmarks[i].name == benchmarks[i - 1].name)
            throw Error(ErrorCode::InvalidConfig, "benchmark '" + benchmarks[i].name + "' selected twice");

    CampaignPlan plan;
    plan.config = config;
    plan.root = std::move(root);

    std::vector<std::vector<BugCoordinate>> bugs;
    std::size_t total_bugs = 0;
    for (const auto& b : benchmarks) {
        bugs.push_back(list_bugs(b, filter));
        for (auto& bug : bugs.back()) bug.benchmark = b.name;
        total_bugs += bugs.back().size();
    }
    if (total_bugs == 0) throw Error(ErrorCode::EmptyPlan, "the bug filter leaves nothing to run");
    if (tools.empty()) throw Error(ErrorCode::EmptyPlan, "no tools selected");

    for (std::size_t t = 0; t < tools.size(); ++t)
        for (std::size_t b = 0; b < benchmarks.size(); ++b)
            for (const auto& bug : bugs[b]) plan.entries.push_back({t, b, bug, config.seed});
    plan.tools = std::move(tools);
    plan.benchmarks = std::move(benchmarks);
    return plan;
}

unsigned default_parallelism() { return std::max(1u, std::thread::hardware_concurrency() / 2); }

namespace {

Json index_line(const AttemptRecord& r, const fs::path& root) {
    Json j = to_json(r);
    j["attempt_dir"] = r.attempt_dir.lexically_relative(root).generic_string();
    return j;
}

std::set<std::string> indexed_dirs(const fs::path& index_path, std::size_t* malformed = nullptr) {
    std::set<std::string> out;
    std::ifstream in(index_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.insert(Json::parse(line).at("attempt_dir").get<std::string>());
        } catch (const Json::exception&) {
            if (malformed) ++*malformed;
        }
    }
    return out;
}

std::optional<AttemptRecord> completed_attempt(const fs::path& dir, const AttemptKey& key) {
    std::error_code ec;
    if (!fs::exists(dir / "attempt.json", ec)) return std::nullopt;
    try {
        auto r = read_attempt(dir);
        if (r.schema_version != kSchemaVersion || r.key() != key) return std::nullopt;
        return r;
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace

CampaignSummary execute_campaign(const CampaignPlan& plan, const ExecuteOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    std::error_code ec;
    fs::create_directories(plan.root, ec);
    if (ec) throw Error(ErrorCode::CampaignIoError, "cannot create results root " + plan.root.string() + ": " + ec.message());

    const fs::path index_path = plan.root / kCampaignIndex;
    auto already_indexed = indexed_dirs(index_path);
    std::ofstream index(index_path, std::ios::app);
    if (!index) throw Error(ErrorCode::CampaignIoError, "cannot open " + index_path.string());

    CampaignSummary summary;
    std::mutex mutex;  // guards summary, index and on_complete

    auto append_index = [&](const AttemptRecord& r) {
        index << index_line(r, plan.root).dump() << '\n';
        index.flush();
        if (!index) throw Error(ErrorCode::CampaignIoError, "cannot append to " + index_path.string());
    };
    auto tally = [&](const AttemptRecord& r) {
        summary.matrix[{r.tool, r.bug.benchmark}][r.outcome]++;
    };

    // Bug-major order: every tool on one bug before moving on.
    std::vector<const CampaignPlan::Entry*> queue;
    for (const auto& e : plan.entries) {
        auto dir = plan.directory(e);
        if (options.resume) {
            if (auto done = completed_attempt(dir, plan.key(e))) {
                ++summary.skipped;
                tally(*done);
                if (!already_indexed.contains(dir.lexically_relative(plan.root).generic_string())) append_index(*done);
                continue;
            }
            fs::remove_all(dir, ec);  // partial leftovers from an interrupted run
        }
        queue.push_back(&e);
    }
    std::stable_sort(queue.begin(), queue.end(), [&](const auto* a, const auto* b) {
        return std::tie(plan.benchmarks[a->benchmark].name, a->bug.bug_id, plan.tools[a->tool].name) <
               std::tie(plan.benchmarks[b->benchmark].name, b->bug.bug_id, plan.tools[b->tool].name);
    });

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stopped{false};
    std::exception_ptr io_failure;

    auto worker = [&] {
        for (;;) {
            if (stopped.load()) return;
            std::size_t i = next.fetch_add(1);
            if (i >= queue.size()) return;
            if (options.stop_after && i >= *options.stop_after) return;
            const auto& e = *queue[i];
            const auto& tool = plan.tools[e.tool];
            const auto& bench = plan.benchmarks[e.benchmark];
            try {
                auto record = run_attempt(tool, bench, e.bug, plan.config, plan.root);
                std::lock_guard lock(mutex);
                ++summary.executed;
                summary.counts[record.outcome]++;
                tally(record);
                try {
                    append_index(record);
                } catch (const Error&) {
                    if (!io_failure) io_failure = std::current_exception();
                    stopped = true;
                }
                if (options.on_complete) options.on_complete(record);
            } catch (const std::exception& ex) {
                std::lock_guard lock(mutex);
                summary.failures.emplace_back(plan.key(e), ex.what());
            }
        }
    };

    unsigned n = std::max(1u, options.parallelism);
    n = static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, queue.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
    }

    summary.not_run = queue.size() - std::min(queue.size(), summary.executed + summary.failures.size());
    summary.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (io_failure) std::rethrow_exception(io_failure);
    return summary;
}

LoadedResults load_results(const fs::path& root) {
    LoadedResults out;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) return out;

    std::vector<fs::path> found;
    for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec)) {
        if (it->is_directory() && it->path().filename() == "workspace") {
            it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file() && it->path().filename() == "attempt.json") found.push_back(it->path().parent_path());
    }
    std::sort(found.begin(), found.end());
    for (const auto& dir : found) {
        try {
            out.results.insert(read_attempt(dir));
        } catch (const Error&) {
            out.malformed.push_back(dir / "attempt.json");
        }
    }
    return out;
}

IndexCheck check_index(const fs::path& root) {
    IndexCheck check;
    auto indexed = indexed_dirs(root / kCampaignIndex, &check.malformed_lines);
    auto loaded = load_results(root);
    std::set<std::string> on_disk;
    for (const auto& r : loaded.results.records()) on_disk.insert(r.attempt_dir.lexically_relative(root).generic_string());
    std::set_difference(on_disk.begin(), on_disk.end(), indexed.begin(), indexed.end(),
                        std::back_inserter(check.missing_from_index));
    std::set_difference(indexed.begin(), indexed.end(), on_disk.begin(), on_disk.end(),
                        std::back_inserter(check.missing_from_tree));
    return check;
}

}  // namespace repairbench
