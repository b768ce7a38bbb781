#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return econet::cli::run(args, econet::cli::process_environment(), std::cout, std::cerr);
}
