#include <vector>
#include <string>

#include "traitlab/commands.hpp"

int main(int argc, char** argv) {
  return traitlab::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
