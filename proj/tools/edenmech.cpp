#include <string>
#include <vector>

#include "edenmech/cli.hpp"

int main(int argc, char** argv) {
  return edenmech::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
