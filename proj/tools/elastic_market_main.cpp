#include <iostream>
#include <string>
#include <vector>

#include "elastic_market/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return elastic_market::run_cli(args, std::cout, std::cerr);
}
