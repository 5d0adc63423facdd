#include <iostream>

#include "graphtsne/cli.hpp"

int main(int argc, char** argv) { return gtsne::cli::run(argc, argv, std::cout, std::cerr); }
