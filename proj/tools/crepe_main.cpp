#include <iostream>
#include <string>
#include <vector>

#include "crepe/harness/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    return crepe::harness::run_cli(args, std::cout, std::cerr);
}
