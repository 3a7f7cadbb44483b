#include <iostream>
#include <string>
#include <vector>

#include "refgrasp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return refgrasp::dispatch(args, std::cout, std::cerr);
}
