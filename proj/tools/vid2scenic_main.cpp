#include <iostream>

#include "vid2scenic/cli/app.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vid2scenic::cli::run_cli(args, std::cout, std::cerr);
}
