#include <iostream>
#include <string>
#include <vector>

#include "condlabel/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return condlabel::cli::run(args, std::cout, std::cerr);
}
