// Single-site mutation repair for the toy language: tries every relational,
// logical and unary operator change and keeps the first candidates that pass
// the whole test suite.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "repairbench/error.hpp"
#include "toy.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;
using namespace repairbench;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<fs::path> files_with(const fs::path& dir, const std::string& ext) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("Naive mutation repair for toy programs", "naive-mutator");
    std::string source, tests, source_bin, test_bin, classpath, level, failing, workspace = ".";
    std::uint64_t seed = 0;
    int patch_limit = 1;
    app.add_option("--source", source)->required();
    app.add_option("--tests", tests)->required();
    app.add_option("--source-bin", source_bin);
    app.add_option("--test-bin", test_bin);
    app.add_option("--classpath", classpath);
    app.add_option("--level", level);
    app.add_option("--failing", failing, "Comma-separated failing test names, tried first");
    app.add_option("--workspace", workspace);
    app.add_option("--seed", seed, "0 keeps source order; other values shuffle it reproducibly");
    app.add_option("--patch-limit", patch_limit, "Stop after this many patches")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    try {
        std::vector<toy::TestCase> suite;
        for (const auto& f : files_with(tests, ".tests")) {
            auto part = toy::parse_tests(read_file(f));
            suite.insert(suite.end(), part.begin(), part.end());
        }
        // Failing tests first: most candidates die there.
        auto first = split(failing, ',');
        std::stable_partition(suite.begin(), suite.end(), [&](const toy::TestCase& t) {
            return std::find(first.begin(), first.end(), t.name) != first.end();
        });

        const fs::path ws = fs::absolute(workspace);
        Json patches = Json::array();
        std::size_t tried = 0;
        for (const auto& file : files_with(source, ".toy")) {
            auto original = read_file(file);
            auto mutations = toy::enumerate_mutations(original);
            for (auto index : toy::enumeration_order(mutations.size(), seed)) {
                const auto& m = mutations[index];
                ++tried;
                auto candidate = toy::apply(original, m);
                if (!toy::passes_all(candidate, suite)) continue;

                auto rel = fs::relative(fs::absolute(file), ws).generic_string();
                fs::path out = ws / ".repair" / ("patch_" + std::to_string(patches.size() + 1)) / rel;
                fs::create_directories(out.parent_path());
                std::ofstream(out, std::ios::binary) << candidate;
                patches.push_back({{"file", rel}, {"content_path", fs::relative(out, ws).generic_string()}});
                std::cout << "patch " << patches.size() << ": " << m.describe() << " in " << rel << std::endl;
                if (static_cast<int>(patches.size()) >= patch_limit) break;
            }
            if (static_cast<int>(patches.size()) >= patch_limit) break;
        }

        if (patches.empty()) {
            std::cout << "search space exhausted: " << tried << " candidates, no test-suite adequate patch" << std::endl;
            return 0;
        }
        fs::create_directories(ws / ".repair");
        std::ofstream(ws / ".repair" / "patches.json") << Json{{"patches", patches}}.dump(2) << '\n';
        std::cout << tried << " candidates tried" << std::endl;
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
