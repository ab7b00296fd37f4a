#include <iostream>

#include "dualabsa/cli.hpp"

int main(int argc, char** argv) { return dualabsa::run_cli(argc, argv, std::cout, std::cerr); }
