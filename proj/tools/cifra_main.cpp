#include <iostream>
#include <string>
#include <vector>

#include "cifra/cli_app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cifra::cli::run(args, std::cout, std::cerr);
}
