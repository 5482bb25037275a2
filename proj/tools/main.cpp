#include "system_file.hpp"

#include <iostream>

int main(int argc, char** argv) { return posimp::cli::run(argc, argv, std::cout, std::cerr); }
