#include <iostream>
#include <string>
#include <vector>

#include "repairbench/cli.hpp"

#ifndef REPAIRBENCH_DEFAULT_PLUGIN_DIR
#define REPAIRBENCH_DEFAULT_PLUGIN_DIR "."
#endif

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    repairbench::cli::Context context{REPAIRBENCH_DEFAULT_PLUGIN_DIR};
    return repairbench::cli::run(args, std::cout, std::cerr, context);
}
