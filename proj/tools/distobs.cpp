#include <iostream>
#include <string>
#include <vector>

#include "distobs/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return distobs::run_command(args, std::cout, std::cerr).exit_code;
}
