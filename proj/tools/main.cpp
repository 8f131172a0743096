#include <vector>

#include "dada/cli.hpp"

int main(int argc, char** argv) {
  return dada::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
