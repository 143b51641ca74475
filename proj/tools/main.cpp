#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return shortcut_gd::cli::cli_main(argc, argv, std::cout, std::cerr); }
