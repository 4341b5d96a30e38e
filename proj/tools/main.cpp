#include <iostream>

#include "prs3/cli.hpp"

int main(int argc, char** argv) { return prs3::cli::run(argc, argv, std::cout, std::cerr); }
