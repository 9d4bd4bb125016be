#include "thrlasso/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return thrlasso::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
