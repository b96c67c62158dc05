#include <iostream>

#include "jdconvex/cli.hpp"

int main(int argc, char** argv) { return jdconvex::run_cli(argc, argv, std::cout, std::cerr); }
