#include <iostream>

#include "forgesr/cli/commands.hpp"

int main(int argc, char** argv) { return forgesr::cli::run_cli(argc, argv, std::cout, std::cerr); }
