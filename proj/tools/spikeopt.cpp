#include <iostream>

#include "spikeopt/cli.hpp"

int main(int argc, char** argv) { return spikeopt::run_cli(argc, argv, std::cout, std::cerr); }
