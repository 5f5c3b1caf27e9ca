#include "ris/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ris::cli::run_main(argc, argv, std::cout, std::cerr); }
