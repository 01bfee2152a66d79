#include <iostream>

#include "experiments.hpp"

int main(int argc, char** argv) { return a3t::cli::run_cli(argc, argv, std::cout, std::cerr); }
