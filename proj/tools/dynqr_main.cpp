#include "dynqr/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return dynqr::cli::run(argc, argv, std::cout, std::cerr); }
