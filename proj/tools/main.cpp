#include "motiondiff/cli.hpp"

#include <iostream>

extern char** environ;

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return motiondiff::run_command(args, std::cout, std::cerr, environ);
}
