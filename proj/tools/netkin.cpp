#include <iostream>

#include "netkin/cli.hpp"

int main(int argc, char **argv) { return netkin::run_cli(argc, argv, std::cout, std::cerr); }
