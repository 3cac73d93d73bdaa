#include <iostream>

#include "cbsim/cli.hpp"

int main(int argc, char** argv) { return cbsim::cli_main(argc, argv, std::cout, std::cerr); }
