#include <iostream>

#include "ztd/cli/commands.hpp"

int main(int argc, char** argv) { return ztd::cli::run_cli(argc, argv, std::cout, std::cerr); }
