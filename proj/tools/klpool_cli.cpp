#include <iostream>
#include <string>
#include <vector>

#include "klpool/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return klpool::cli::run(args, std::cout, std::cerr);
}
