#include <string>
#include <vector>

#include "pbchron/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pbchron::cli::dispatch(args);
}
