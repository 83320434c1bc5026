#include <iostream>

#include "stopf/cli.hpp"

int main(int argc, char** argv) { return stopf::run_cli(argc, argv, std::cout, std::cerr); }
