#include <string>
#include <vector>

#include "flowadmm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return flowadmm::cli::run(args);
}
