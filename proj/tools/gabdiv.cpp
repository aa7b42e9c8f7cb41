#include <iostream>

#include "gabdiv/cli.hpp"

int main(int argc, char** argv) { return gabdiv::cli::run(argc, argv, std::cout, std::cerr); }
