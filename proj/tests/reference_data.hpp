#pragma once

// Reported patched-bug counts for eleven tools on five benchmarks, and helpers
// that build patched sets consistent with them.

#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "repairbench/analysis.hpp"
#include "support.hpp"

namespace reference {

using repairbench::BugCoordinate;
using repairbench::PatchedSets;

inline const std::vector<std::string> kBenchmarks = {"Bears", "Bugs.jar", "Defects4J", "IntroClassJava", "QuixBugs"};
inline const std::map<std::string, std::size_t> kSizes = {
    {"Bears", 251}, {"Bugs.jar", 1158}, {"Defects4J", 395}, {"IntroClassJava", 297}, {"QuixBugs", 40}};
// Bugs patched by at least one tool.
inline const std::map<std::string, std::size_t> kUniqueUnion = {
    {"Bears", 25}, {"Bugs.jar", 173}, {"Defects4J", 187}, {"IntroClassJava", 62}, {"QuixBugs", 12}};
inline const std::map<std::string, std::size_t> kColumnTotals = {
    {"Bears", 74}, {"Bugs.jar", 304}, {"Defects4J", 550}, {"IntroClassJava", 139}, {"QuixBugs", 31}};

struct Row {
    std::string tool;
    std::array<std::size_t, 5> counts;  // in kBenchmarks order
    std::size_t total;
};

inline const std::vector<Row> kRows = {
    {"ARJA", {12, 21, 86, 23, 4}, 146},     {"GenProg-A", {1, 9, 45, 18, 4}, 77},
    {"Kali-A", {15, 24, 72, 5, 2}, 118},    {"RSRepair-A", {1, 6, 62, 22, 4}, 95},
    {"Cardumen", {13, 12, 17, 0, 4}, 46},   {"jGenProg", {13, 14, 31, 4, 3}, 65},
    {"jKali", {10, 8, 27, 5, 2}, 52},       {"jMutRepair", {7, 11, 20, 24, 3}, 65},
    {"Nopol", {1, 72, 107, 32, 1}, 213},    {"DynaMoth", {0, 124, 74, 6, 2}, 206},
    {"NPEFix", {1, 3, 9, 0, 2}, 15},
};

// Reported p-values; nullopt stands for "< 0.00001".
inline const std::map<std::string, std::optional<double>> kPValues = {
    {"ARJA", std::nullopt},   {"GenProg-A", std::nullopt}, {"Kali-A", std::nullopt},
    {"RSRepair-A", std::nullopt}, {"Cardumen", 0.00107},   {"jGenProg", std::nullopt},
    {"jKali", std::nullopt},  {"jMutRepair", 0.009309},    {"Nopol", std::nullopt},
    {"DynaMoth", std::nullopt}, {"NPEFix", std::nullopt},
};

inline BugCoordinate bug(const std::string& benchmark, std::size_t i) {
    return {benchmark, "", "b" + std::to_string(i)};
}

/// Per-benchmark sets with the reported counts whose union per benchmark is
/// the reported unique count: tools take consecutive runs of bugs around a
/// cycle of that many bugs.
inline PatchedSets benchmark_sets() {
    PatchedSets sets;
    for (const auto& row : kRows) sets[row.tool];
    for (std::size_t b = 0; b < kBenchmarks.size(); ++b) {
        const auto& name = kBenchmarks[b];
        std::size_t cycle = kUniqueUnion.at(name), offset = 0;
        for (const auto& row : kRows) {
            for (std::size_t k = 0; k < row.counts[b]; ++k) sets[row.tool].insert(bug(name, (offset + k) % cycle));
            offset += row.counts[b];
        }
    }
    return sets;
}

/// Sets realizing the reported pairwise overlaps, read from the frozen
/// region solution (`<count> <tool,tool,...>` per line).
inline PatchedSets overlap_sets() {
    PatchedSets sets;
    for (const auto& row : kRows) sets[row.tool];
    std::ifstream in(testing::data_dir() / "overlap_regions.txt");
    std::size_t next = 0;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::size_t count;
        std::string tools;
        ls >> count >> tools;
        std::vector<std::string> members;
        std::stringstream ts(tools);
        for (std::string t; std::getline(ts, t, ',');) members.push_back(t);
        for (std::size_t k = 0; k < count; ++k, ++next)
            for (const auto& t : members) sets.at(t).insert(bug("all", next));
    }
    return sets;
}

/// Printed row percentages of the overlap matrix, tool order as in kRows.
inline std::map<std::string, std::vector<long>> overlap_percentages() {
    std::map<std::string, std::vector<long>> out;
    std::ifstream in(testing::data_dir() / "overlap_percentages.txt");
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tool;
        ls >> tool;
        for (long v; ls >> v;) out[tool].push_back(v);
    }
    return out;
}

// Absolute counts of the same matrix; the diagonal holds unique bugs.
inline const std::vector<std::vector<std::size_t>> kOverlapCounts = {
    {20, 66, 82, 81, 23, 44, 40, 29, 53, 48, 4},   {66, 3, 49, 63, 17, 31, 29, 18, 33, 31, 2},
    {82, 49, 11, 55, 20, 34, 44, 28, 56, 54, 2},   {81, 63, 55, 5, 17, 37, 30, 20, 36, 35, 2},
    {23, 17, 20, 17, 12, 30, 21, 15, 10, 12, 2},   {44, 31, 34, 37, 30, 6, 36, 27, 19, 24, 2},
    {40, 29, 44, 30, 21, 36, 0, 30, 28, 35, 1},    {29, 18, 28, 20, 15, 27, 30, 10, 38, 20, 1},
    {53, 33, 56, 36, 10, 19, 28, 38, 57, 114, 2},  {48, 31, 54, 35, 12, 24, 35, 20, 114, 75, 1},
    {4, 2, 2, 2, 2, 2, 1, 1, 2, 1, 8},
};

}  // namespace reference
