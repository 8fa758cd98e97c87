#include <iostream>
#include <string>
#include <vector>

#include "rtsize/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return rtsize::run_cli(args, std::cout, std::cerr);
}
