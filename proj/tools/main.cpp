#include "sembench/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return sembench::run_cli(argc, argv, std::cout, std::cerr);
}
