#include <iostream>

#include "icm/cli/app.hpp"

int main(int argc, char** argv) { return icm::cli::run(argc, argv, std::cout, std::cerr); }
