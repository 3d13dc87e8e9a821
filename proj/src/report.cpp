#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "repairbench/analysis.hpp"
#include "repairbench/error.hpp"
#include "repairbench/format.hpp"

namespace fs = std::filesystem;

namespace repairbench {

std::string percent_2dp(std::size_t num, std::size_t den) {
    if (den == 0) return "-";
    // Hundredths of a percent, half-up in integer arithmetic.
    unsigned long long n = num, d = den;
    unsigned long long h = (n * 20000ULL / d + 1) / 2;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%llu.%02llu", h / 100, h % 100);
    return buf;
}

std::string fixed_2dp(double value) {
    double h = std::floor(value * 100.0 + 0.5 + 1e-9);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", h / 100.0);
    return buf;
}

long percent_floor(std::size_t num, std::size_t den) {
    if (den == 0) throw Error(ErrorCode::InvalidConfig, "percentage of an empty set");
    return static_cast<long>((static_cast<unsigned long long>(num) * 100ULL) / den);
}

std::string format_p_value(double p) {
    if (p < 1e-5) return "< 0.00001";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", p);
    return buf;
}

ReportFormat parse_report_format(std::string_view text) {
    if (text == "md" || text == "markdown") return ReportFormat::Markdown;
    if (text == "csv") return ReportFormat::Csv;
    if (text == "json") return ReportFormat::Json;
    throw Error(ErrorCode::InvalidConfig, "unknown report format '" + std::string(text) + "' (md, csv, json)");
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string opt_2dp(const std::optional<double>& v) { return v ? fixed_2dp(*v) : "-"; }

std::string rate_text(const RateCell& c) { return c.attempts ? percent_2dp(c.count, c.attempts) : "-"; }

std::string overlap_text(const OverlapCell& c) {
    return (c.percentage ? std::to_string(*c.percentage) + "%" : std::string("-")) + " (" + std::to_string(c.count) + ")";
}

std::string statistic_text(const std::optional<double>& s) {
    if (!s) return "-";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4f", *s);
    return buf;
}

std::string alpha_text(double alpha) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", alpha);
    return buf;
}

// --- markdown -------------------------------------------------------------

std::string md_repairability(const RepairabilityTable& t) {
    std::ostringstream o;
    o << "| Tool | Unique | Overlapped | Total | % of " << t.bug_count << " bugs |\n|---|---:|---:|---:|---:|\n";
    for (const auto& [tool, r] : t.rows)
        o << "| " << tool << " | " << r.unique << " | " << r.overlapped << " | " << r.total << " | "
          << percent_2dp(r.total, t.bug_count) << " |\n";
    return o.str();
}

std::string md_overlap(const OverlapMatrix& m) {
    std::ostringstream o;
    o << "| |";
    for (const auto& t : m.tools) o << ' ' << t << " |";
    o << "\n|---|";
    for (std::size_t i = 0; i < m.tools.size(); ++i) o << "---:|";
    o << '\n';
    for (std::size_t i = 0; i < m.tools.size(); ++i) {
        o << "| " << m.tools[i] << " |";
        for (const auto& c : m.cells[i]) o << ' ' << overlap_text(c) << " |";
        o << '\n';
    }
    return o.str();
}

std::string md_benchmarks(const BenchmarkTable& t) {
    std::ostringstream o;
    o << "| Tool |";
    for (const auto& b : t.benchmarks) o << ' ' << b << " (" << t.sizes.at(b) << ") |";
    o << " Total (" << t.bug_total << ") |\n|---|";
    for (std::size_t i = 0; i <= t.benchmarks.size(); ++i) o << "---:|";
    o << '\n';
    for (const auto& tool : t.tools) {
        o << "| " << tool << " |";
        for (const auto& b : t.benchmarks) {
            auto n = t.patched.at(tool).at(b);
            o << ' ' << n << " (" << percent_2dp(n, t.sizes.at(b)) << "%) |";
        }
        auto total = t.tool_totals.at(tool);
        o << ' ' << total << " (" << percent_2dp(total, t.bug_total) << "%) |\n";
    }
    o << "| Total |";
    for (const auto& b : t.benchmarks) o << ' ' << t.column_total(b) << " |";
    o << ' ' << t.grand_total() << " |\n";
    o << "| Total unique |";
    for (const auto& b : t.benchmarks) {
        auto n = t.unique_per_benchmark.at(b);
        o << ' ' << n << " (" << percent_2dp(n, t.sizes.at(b)) << "%) |";
    }
    o << ' ' << t.unique_total << " (" << percent_2dp(t.unique_total, t.bug_total) << "%) |\n";
    return o.str();
}

std::string md_overfit(const std::string& reference, const std::vector<OverfitTestResult>& results) {
    std::ostringstream o;
    o << "Reference benchmark: " << reference << "\n\n";
    o << "| Tool | a | b | c | d | Chi-square | p-value | Reject H0 |\n|---|---:|---:|---:|---:|---:|---:|---|\n";
    for (const auto& r : results) {
        o << "| " << r.tool << " | " << r.table.a << " | " << r.table.b << " | " << r.table.c << " | " << r.table.d
          << " | " << statistic_text(r.statistic) << " | " << (r.p_value ? format_p_value(*r.p_value) : "-") << " | ";
        if (!r.error.empty())
            o << "n/a: " << r.error;
        else
            o << (r.reject_null ? "yes" : "no") << " (alpha " << alpha_text(r.alpha) << ")";
        o << " |\n";
    }
    return o.str();
}

std::string md_rates(const RateTable& t) {
    std::ostringstream o;
    o << "Share of attempts ending in " << to_string(t.outcome) << " (%)\n\n| Tool |";
    for (const auto& b : t.benchmarks) o << ' ' << b << " |";
    o << " Average (weighted) | Average (unweighted) |\n|---|";
    for (std::size_t i = 0; i < t.benchmarks.size() + 2; ++i) o << "---:|";
    o << '\n';
    auto cell_of = [&](const std::string& tool, const std::string& b) {
        auto row = t.cells.find(tool);
        if (row == t.cells.end()) return RateCell{};
        auto it = row->second.find(b);
        return it == row->second.end() ? RateCell{} : it->second;
    };
    for (const auto& tool : t.tools) {
        o << "| " << tool << " |";
        for (const auto& b : t.benchmarks) o << ' ' << rate_text(cell_of(tool, b)) << " |";
        o << ' ' << rate_text(t.tool_pooled(tool)) << " | " << opt_2dp(t.tool_unweighted(tool)) << " |\n";
    }
    o << "| Average (weighted) |";
    for (const auto& b : t.benchmarks) o << ' ' << rate_text(t.benchmark_pooled(b)) << " |";
    o << ' ' << rate_text(t.overall()) << " | |\n";
    o << "| Average (unweighted) |";
    for (const auto& b : t.benchmarks) o << ' ' << opt_2dp(t.benchmark_unweighted(b)) << " |";
    o << " | " << opt_2dp(t.overall_unweighted()) << " |\n";
    return o.str();
}

// --- csv ------------------------------------------------------------------

std::string csv_repairability(const RepairabilityTable& t) {
    std::ostringstream o;
    o << "tool,unique,overlapped,total,percentage\n";
    for (const auto& [tool, r] : t.rows)
        o << csv_field(tool) << ',' << r.unique << ',' << r.overlapped << ',' << r.total << ','
          << percent_2dp(r.total, t.bug_count) << '\n';
    return o.str();
}

std::string csv_overlap(const OverlapMatrix& m) {
    std::ostringstream o;
    o << "tool,other,count,percentage\n";
    for (std::size_t i = 0; i < m.tools.size(); ++i)
        for (std::size_t j = 0; j < m.tools.size(); ++j) {
            const auto& c = m.cells[i][j];
            o << csv_field(m.tools[i]) << ',' << csv_field(m.tools[j]) << ',' << c.count << ','
              << (c.percentage ? std::to_string(*c.percentage) : "") << '\n';
        }
    return o.str();
}

std::string csv_benchmarks(const BenchmarkTable& t) {
    std::ostringstream o;
    o << "tool,benchmark,patched,bugs,percentage\n";
    for (const auto& tool : t.tools) {
        for (const auto& b : t.benchmarks) {
            auto n = t.patched.at(tool).at(b);
            o << csv_field(tool) << ',' << csv_field(b) << ',' << n << ',' << t.sizes.at(b) << ','
              << percent_2dp(n, t.sizes.at(b)) << '\n';
        }
        auto total = t.tool_totals.at(tool);
        o << csv_field(tool) << ",ALL," << total << ',' << t.bug_total << ',' << percent_2dp(total, t.bug_total) << '\n';
    }
    for (const auto& b : t.benchmarks)
        o << "TOTAL," << csv_field(b) << ',' << t.column_total(b) << ',' << t.sizes.at(b) << ",\n";
    o << "TOTAL,ALL," << t.grand_total() << ',' << t.bug_total << ",\n";
    for (const auto& b : t.benchmarks) {
        auto n = t.unique_per_benchmark.at(b);
        o << "TOTAL_UNIQUE," << csv_field(b) << ',' << n << ',' << t.sizes.at(b) << ',' << percent_2dp(n, t.sizes.at(b))
          << '\n';
    }
    o << "TOTAL_UNIQUE,ALL," << t.unique_total << ',' << t.bug_total << ','
      << percent_2dp(t.unique_total, t.bug_total) << '\n';
    return o.str();
}

std::string csv_overfit(const std::string& reference, const std::vector<OverfitTestResult>& results) {
    std::ostringstream o;
    o << "tool,reference,a,b,c,d,statistic,p_value,alpha,reject_null,error\n";
    for (const auto& r : results)
        o << csv_field(r.tool) << ',' << csv_field(reference) << ',' << r.table.a << ',' << r.table.b << ','
          << r.table.c << ',' << r.table.d << ',' << (r.statistic ? statistic_text(r.statistic) : "") << ','
          << (r.p_value ? format_p_value(*r.p_value) : "") << ',' << alpha_text(r.alpha) << ','
          << (r.error.empty() ? (r.reject_null ? "true" : "false") : "") << ',' << csv_field(r.error) << '\n';
    return o.str();
}

std::string csv_rates(const RateTable& t) {
    std::ostringstream o;
    o << "tool,benchmark,count,attempts,percentage\n";
    for (const auto& [tool, row] : t.cells)
        for (const auto& [b, c] : row)
            o << csv_field(tool) << ',' << csv_field(b) << ',' << c.count << ',' << c.attempts << ',' << rate_text(c)
              << '\n';
    for (const auto& tool : t.tools) {
        auto p = t.tool_pooled(tool);
        o << csv_field(tool) << ",AVERAGE_WEIGHTED," << p.count << ',' << p.attempts << ',' << rate_text(p) << '\n';
        o << csv_field(tool) << ",AVERAGE_UNWEIGHTED,,," << opt_2dp(t.tool_unweighted(tool)) << '\n';
    }
    for (const auto& b : t.benchmarks) {
        auto p = t.benchmark_pooled(b);
        o << "AVERAGE_WEIGHTED," << csv_field(b) << ',' << p.count << ',' << p.attempts << ',' << rate_text(p) << '\n';
        o << "AVERAGE_UNWEIGHTED," << csv_field(b) << ",,," << opt_2dp(t.benchmark_unweighted(b)) << '\n';
    }
    auto all = t.overall();
    o << "AVERAGE_WEIGHTED,ALL," << all.count << ',' << all.attempts << ',' << rate_text(all) << '\n';
    o << "AVERAGE_UNWEIGHTED,ALL,,," << opt_2dp(t.overall_unweighted()) << '\n';
    return o.str();
}

// --- json -----------------------------------------------------------------

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(); }

Json json_repairability(const RepairabilityTable& t) {
    Json rows = Json::array();
    for (const auto& [tool, r] : t.rows)
        rows.push_back({{"tool", tool},
                        {"unique", r.unique},
                        {"overlapped", r.overlapped},
                        {"total", r.total},
                        {"percentage", percent_2dp(r.total, t.bug_count)}});
    return {{"bug_count", t.bug_count}, {"tools", rows}};
}

Json json_overlap(const OverlapMatrix& m) {
    Json cells = Json::array();
    for (const auto& row : m.cells) {
        Json r = Json::array();
        for (const auto& c : row) r.push_back({{"count", c.count}, {"percentage", c.percentage ? Json(*c.percentage) : Json()}});
        cells.push_back(std::move(r));
    }
    return {{"tools", m.tools}, {"cells", cells}};
}

Json json_benchmarks(const BenchmarkTable& t) {
    return {{"tools", t.tools},
            {"benchmarks", t.benchmarks},
            {"sizes", t.sizes},
            {"patched", t.patched},
            {"tool_totals", t.tool_totals},
            {"unique_per_benchmark", t.unique_per_benchmark},
            {"unique_total", t.unique_total},
            {"bug_total", t.bug_total},
            {"unique_percentage", percent_2dp(t.unique_total, t.bug_total)}};
}

Json json_overfit(const std::string& reference, const std::vector<OverfitTestResult>& results) {
    Json rows = Json::array();
    for (const auto& r : results)
        rows.push_back({{"tool", r.tool},
                        {"a", r.table.a},
                        {"b", r.table.b},
                        {"c", r.table.c},
                        {"d", r.table.d},
                        {"statistic", opt_json(r.statistic)},
                        {"p_value", opt_json(r.p_value)},
                        {"p_value_display", r.p_value ? format_p_value(*r.p_value) : "-"},
                        {"alpha", r.alpha},
                        {"reject_null", r.reject_null},
                        {"error", r.error}});
    return {{"reference", reference}, {"results", rows}};
}

Json json_rates(const RateTable& t) {
    Json cells = Json::object();
    for (const auto& [tool, row] : t.cells)
        for (const auto& [b, c] : row) cells[tool][b] = {{"count", c.count}, {"attempts", c.attempts}};
    Json tool_avg = Json::object(), bench_avg = Json::object();
    for (const auto& tool : t.tools)
        tool_avg[tool] = {{"weighted", rate_text(t.tool_pooled(tool))}, {"unweighted", opt_2dp(t.tool_unweighted(tool))}};
    for (const auto& b : t.benchmarks)
        bench_avg[b] = {{"weighted", rate_text(t.benchmark_pooled(b))},
                        {"unweighted", opt_2dp(t.benchmark_unweighted(b))}};
    return {{"outcome", std::string(to_string(t.outcome))},
            {"tools", t.tools},
            {"benchmarks", t.benchmarks},
            {"cells", cells},
            {"tool_averages", tool_avg},
            {"benchmark_averages", bench_avg},
            {"overall", {{"weighted", rate_text(t.overall())}, {"unweighted", opt_2dp(t.overall_unweighted())}}}};
}

RateTable rates_from_json(const Json& j) {
    RateTable t;
    t.outcome = parse_outcome(j.at("outcome").get<std::string>());
    t.tools = j.at("tools").get<std::vector<std::string>>();
    t.benchmarks = j.at("benchmarks").get<std::vector<std::string>>();
    for (const auto& [tool, row] : j.at("cells").items())
        for (const auto& [b, c] : row.items()) t.cells[tool][b] = {c.at("count"), c.at("attempts")};
    return t;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out.flush()) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

}  // namespace

std::vector<fs::path> emit_report(const AnalysisBundle& b, ReportFormat format, const fs::path& dest) {
    std::error_code ec;
    fs::create_directories(dest, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dest.string() + ": " + ec.message());

    std::vector<std::pair<std::string, std::string>> files;
    switch (format) {
        case ReportFormat::Markdown:
            files = {{"repairability.md", md_repairability(b.repairability)},
                     {"overlap_matrix.md", md_overlap(b.overlap)},
                     {"benchmark_table.md", md_benchmarks(b.benchmarks)},
                     {"overfit_test.md", md_overfit(b.reference, b.overfit)},
                     {"error_rates.md", md_rates(b.error_rates)},
                     {"timeout_rates.md", md_rates(b.timeout_rates)}};
            break;
        case ReportFormat::Csv:
            files = {{"repairability.csv", csv_repairability(b.repairability)},
                     {"overlap_matrix.csv", csv_overlap(b.overlap)},
                     {"benchmark_table.csv", csv_benchmarks(b.benchmarks)},
                     {"overfit_test.csv", csv_overfit(b.reference, b.overfit)},
                     {"error_rates.csv", csv_rates(b.error_rates)},
                     {"timeout_rates.csv", csv_rates(b.timeout_rates)}};
            break;
        case ReportFormat::Json:
            files = {{"repairability.json", json_repairability(b.repairability).dump(2) + "\n"},
                     {"overlap_matrix.json", json_overlap(b.overlap).dump(2) + "\n"},
                     {"benchmark_table.json", json_benchmarks(b.benchmarks).dump(2) + "\n"},
                     {"overfit_test.json", json_overfit(b.reference, b.overfit).dump(2) + "\n"},
                     {"error_rates.json", json_rates(b.error_rates).dump(2) + "\n"},
                     {"timeout_rates.json", json_rates(b.timeout_rates).dump(2) + "\n"}};
            break;
    }
    std::vector<fs::path> written;
    for (const auto& [name, text] : files) {
        write_text(dest / name, text);
        written.push_back(dest / name);
    }
    return written;
}

AnalysisBundle load_json_report(const fs::path& dest) {
    AnalysisBundle b;
    try {
        auto rep = read_json_file(dest / "repairability.json");
        b.repairability.bug_count = rep.at("bug_count");
        for (const auto& r : rep.at("tools"))
            b.repairability.rows[r.at("tool").get<std::string>()] = {r.at("unique"), r.at("overlapped"), r.at("total")};

        auto ov = read_json_file(dest / "overlap_matrix.json");
        b.overlap.tools = ov.at("tools").get<std::vector<std::string>>();
        for (const auto& row : ov.at("cells")) {
            std::vector<OverlapCell> cells;
            for (const auto& c : row) {
                OverlapCell cell;
                cell.count = c.at("count");
                if (!c.at("percentage").is_null()) cell.percentage = c.at("percentage").get<long>();
                cells.push_back(cell);
            }
            b.overlap.cells.push_back(std::move(cells));
        }

        auto bt = read_json_file(dest / "benchmark_table.json");
        auto& t = b.benchmarks;
        bt.at("tools").get_to(t.tools);
        bt.at("benchmarks").get_to(t.benchmarks);
        bt.at("sizes").get_to(t.sizes);
        bt.at("patched").get_to(t.patched);
        bt.at("tool_totals").get_to(t.tool_totals);
        bt.at("unique_per_benchmark").get_to(t.unique_per_benchmark);
        t.unique_total = bt.at("unique_total");
        t.bug_total = bt.at("bug_total");

        auto of = read_json_file(dest / "overfit_test.json");
        b.reference = of.at("reference");
        for (const auto& r : of.at("results")) {
            OverfitTestResult res;
            res.tool = r.at("tool");
            res.table = {r.at("a"), r.at("b"), r.at("c"), r.at("d")};
            if (!r.at("statistic").is_null()) res.statistic = r.at("statistic").get<double>();
            if (!r.at("p_value").is_null()) res.p_value = r.at("p_value").get<double>();
            res.alpha = r.at("alpha");
            res.reject_null = r.at("reject_null");
            res.error = r.at("error");
            b.overfit.push_back(std::move(res));
        }

        b.error_rates = rates_from_json(read_json_file(dest / "error_rates.json"));
        b.timeout_rates = rates_from_json(read_json_file(dest / "timeout_rates.json"));
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("report in ") + dest.string() + ": " + e.what());
    }
    return b;
}

}  // namespace repairbench
