#include <vector>

#include "bridgelab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bridgelab::run_cli(args);
}
