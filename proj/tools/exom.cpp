#include <string>
#include <vector>

#include "exom/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return exom::cli::run_cli(std::move(args));
}
