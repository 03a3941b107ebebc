#include <iostream>
#include <string>
#include <vector>

#include "krrlab/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return krrlab::cli::dispatch(args, std::cout, std::cerr);
}
