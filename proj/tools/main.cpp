#include <string>
#include <vector>

#include "sgldlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sgldlab::cli_main(args);
}
