#include <iostream>

#include "segzero/cli.hpp"

int main(int argc, char** argv) { return segzero::cli::run(argc, argv, std::cout, std::cerr); }
