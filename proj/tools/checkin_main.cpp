#include <iostream>
#include <string>
#include <vector>

#include "checkin/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return checkin::run_cli(args, std::cout, std::cerr);
}
