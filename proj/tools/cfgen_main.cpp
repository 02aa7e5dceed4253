#include <iostream>
#include <string>
#include <vector>

#include "cfgen/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cfgen::cli::run_cli(args, std::cout, std::cerr).exit_code;
}
