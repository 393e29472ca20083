#include <iostream>
#include <string>
#include <vector>

#include "hsgn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hsgn::run_cli(args, std::cout, std::cerr);
}
