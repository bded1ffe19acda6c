#include <iostream>
#include <string>
#include <vector>

#include "lmfuse/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return lmfuse::run_cli(args, std::cout, std::cerr);
}
