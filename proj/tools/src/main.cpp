#include <iostream>

#include "mixnet_cli/cli.hpp"

int main(int argc, char** argv) { return mixnet::cli::run(argc, argv, std::cout, std::cerr); }
