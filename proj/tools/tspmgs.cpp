#include <string>
#include <vector>

#include "tspmgs/cli.hpp"

int main(int argc, char** argv) {
  return tspmgs::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
