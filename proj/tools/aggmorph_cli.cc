#include <iostream>
#include <string>
#include <vector>

#include "aggmorph/pipeline.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return aggmorph::RunCommand(args, std::cout, std::cerr);
}
