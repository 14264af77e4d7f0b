#include <iostream>

#include "roughvol/cli/commands.hpp"

int main(int argc, char** argv) { return roughvol::cli::run(argc, argv, std::cout, std::cerr); }
