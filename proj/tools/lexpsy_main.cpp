#include <iostream>

#include "lexpsy/cli.hpp"

int main(int argc, char** argv) { return lexpsy::cli::run(argc, argv, std::cout, std::cerr); }
