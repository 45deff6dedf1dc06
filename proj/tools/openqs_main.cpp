#include <iostream>

#include "openqs/cli.hpp"

int main(int argc, char** argv) { return oqs::cli::main_entry(argc, argv, std::cout, std::cerr); }
