#include <iostream>

#include "tbss/cli.hpp"

int main(int argc, char** argv) { return tbss::run_cli(argc, argv, std::cout, std::cerr); }
