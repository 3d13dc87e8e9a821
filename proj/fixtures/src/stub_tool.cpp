// Scripted stand-in for a repair tool. Accepts the canonical parameter flags
// and behaves as told by --behavior.

#include <signal.h>
#include <sys/types.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

[[noreturn]] void hang(bool ignore_term) {
    if (ignore_term) ::signal(SIGTERM, SIG_IGN);
    for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

// Writes `count` patched files, either in place or through the manifest.
void emit(const fs::path& workspace, const fs::path& source, int count, bool in_place) {
    Json patches = Json::array();
    fs::path src = source.empty() ? workspace / "src" : source;
    for (int i = 0; i < count; ++i) {
        fs::path file;
        std::string content;
        if (i == 0) {
            file = src / "program.toy";
            content = read_file(file) + "# stub patch\n";
        } else {
            file = src / ("stub_patch_" + std::to_string(i) + ".toy");
            content = "return " + std::to_string(i) + "\n";
        }
        if (in_place)
            write_file(file, content);
        else
            patches.push_back({{"file", fs::relative(file, workspace).generic_string()}, {"content", content}});
    }
    if (!in_place) write_file(workspace / ".repair" / "patches.json", Json{{"patches", patches}}.dump(2));
    std::cout << "stub: emitted " << count << " patch(es)" << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("Scripted repair tool stand-in", "stub-tool");
    std::string behavior = "noop", message;
    double after = 0;
    int count = 1, code = 1;
    bool ignore_term = false, grandchild = false, in_place = false;
    std::string source, tests, source_bin, test_bin, classpath, level, failing, workspace = ".";
    long long seed = 0;
    int patch_limit = 1;

    app.add_option("--behavior", behavior)
        ->check(CLI::IsMember({"emit", "emit-hang", "crash", "hang", "noop", "emit-outside"}));
    app.add_option("--after", after, "Seconds to wait before acting");
    app.add_option("--count", count, "Patches to emit");
    app.add_option("--code", code, "Exit code for crash (and emit)");
    app.add_option("--message", message, "Line printed to stdout first");
    app.add_flag("--ignore-term", ignore_term, "Ignore SIGTERM while hanging");
    app.add_flag("--spawn-grandchild", grandchild, "Fork a child that hangs too");
    app.add_flag("--in-place", in_place, "Edit files instead of writing the patch manifest");
    app.add_option("--source", source);
    app.add_option("--tests", tests);
    app.add_option("--source-bin", source_bin);
    app.add_option("--test-bin", test_bin);
    app.add_option("--classpath", classpath);
    app.add_option("--level", level);
    app.add_option("--failing", failing);
    app.add_option("--workspace", workspace);
    app.add_option("--seed", seed);
    app.add_option("--patch-limit", patch_limit);
    CLI11_PARSE(app, argc, argv);

    if (!message.empty()) std::cout << message << std::endl;
    if (grandchild) {
        pid_t pid = ::fork();
        if (pid == 0) hang(ignore_term);
    }
    if (after > 0) std::this_thread::sleep_for(std::chrono::duration<double>(after));

    if (behavior == "emit" || behavior == "emit-hang") {
        emit(workspace, source, count, in_place);
        if (behavior == "emit-hang") hang(ignore_term);
        return behavior == "emit" && app.count("--code") ? code : 0;
    }
    if (behavior == "emit-outside") {
        Json patches = Json::array({{{"file", "../../outside.toy"}, {"content", "return 0\n"}}});
        write_file(fs::path(workspace) / ".repair" / "patches.json", Json{{"patches", patches}}.dump(2));
        std::cout << "stub: emitted a patch outside the workspace" << std::endl;
        return 0;
    }
    if (behavior == "crash") {
        std::cerr << "stub: simulated crash" << std::endl;
        return code;
    }
    if (behavior == "hang") {
        std::cout << "stub: hanging" << std::endl;
        hang(ignore_term);
    }
    std::cout << "stub: nothing to do" << std::endl;
    return 0;
}
