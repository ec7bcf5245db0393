#include <iostream>
#include <string>
#include <vector>

#include "circdet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return circdet::cli::run(args, std::cout, std::cerr);
}
