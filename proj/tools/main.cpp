#include <iostream>
#include <string>
#include <vector>

#include "dmlkit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dmlkit::cli::dispatch(args, std::cout, std::cerr);
}
