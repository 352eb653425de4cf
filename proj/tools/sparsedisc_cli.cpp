#include <iostream>

#include "sparsedisc/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return sparsedisc::cli::dispatch(args, std::cout, std::cerr);
}
