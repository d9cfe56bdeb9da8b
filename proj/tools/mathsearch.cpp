#include <iostream>

#include "mathsearch/cli.hpp"

int main(int argc, char** argv) { return mathsearch::run_cli(argc, argv, std::cout, std::cerr); }
