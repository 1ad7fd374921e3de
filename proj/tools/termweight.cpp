#include <iostream>

#include "termweight/cli/commands.hpp"

int main(int argc, char** argv) { return termweight::cli::run_cli(argc, argv, std::cout, std::cerr); }
