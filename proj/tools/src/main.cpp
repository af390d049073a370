#include <iostream>

#include "cfvn_cli/commands.hpp"

int main(int argc, char** argv) { return cfvn::cli::run(argc, argv, std::cout, std::cerr); }
