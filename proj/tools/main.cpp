#include <iostream>
#include <string>
#include <vector>

#include "p2m/pipeline/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return p2m::pipeline::dispatch(args, std::cout, std::cerr);
}
