#include <iostream>
#include <string>
#include <vector>

#include "dualtrack/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dualtrack::run_cli(args, std::cout, std::cerr);
}
