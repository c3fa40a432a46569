#include <iostream>

#include "qdetect_cli/commands.hpp"

int main(int argc, char** argv) { return qdetect::cli::run_cli(argc, argv, std::cout, std::cerr); }
