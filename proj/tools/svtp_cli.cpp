#include <iostream>

#include "svtp/commands.hpp"

int main(int argc, char** argv) { return svtp::cli::run(argc, argv, std::cout, std::cerr); }
