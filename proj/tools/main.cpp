#include <iostream>

#include "slidegen/cli.hpp"

int main(int argc, char** argv) { return slidegen::cli::run(argc, argv, std::cout, std::cerr); }
