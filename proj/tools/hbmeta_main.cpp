#include <vector>

#include "hbmeta/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hbmeta::cli::run_cli(args);
}
