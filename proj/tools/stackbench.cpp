#include <iostream>
#include <string>
#include <vector>

#include "stackbench/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return stackbench::run_cli(args, std::cout, std::cerr);
}
