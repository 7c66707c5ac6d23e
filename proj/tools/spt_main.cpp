#include <iostream>
#include <string>
#include <vector>

#include "spt/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return spt::cli_run(args, std::cout, std::cerr);
}
