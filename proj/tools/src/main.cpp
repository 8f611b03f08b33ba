#include "tdbc/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return tdbc::run_cli(argc, argv, std::cout, std::cerr); }
