#include <iostream>

#include "carts/cli.hpp"

int main(int argc, char** argv) { return carts::cli::run(argc, argv, std::cout, std::cerr); }
