#include <iostream>
#include <string>
#include <vector>

#include "mixlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mixlab::run(args, std::cout, std::cerr);
}
