#include <iostream>

#include "countdiag/cli.hpp"

int main(int argc, char** argv) { return countdiag::run_cli(argc, argv, std::cout, std::cerr); }
