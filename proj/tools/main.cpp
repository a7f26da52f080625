#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  refcast::cli::RunOptions options;
  options.styled = isatty(STDOUT_FILENO) != 0 && std::getenv("REFCAST_NO_COLOR") == nullptr;
  return refcast::cli::run(args, std::cout, std::cerr, options);
}
