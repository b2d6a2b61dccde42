#include <iostream>

#include "mttm/cli.hpp"

int main(int argc, char** argv) { return mttm::run_cli(argc, argv, std::cout, std::cerr); }
