#include <iostream>

#include "scim/cli.hpp"

int main(int argc, char** argv) { return scim::cli::run(argc, argv, std::cout, std::cerr); }
