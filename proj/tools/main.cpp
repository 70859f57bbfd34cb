#include "sigpal/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sigpal::cli::run(argc, argv, std::cout, std::cerr); }
