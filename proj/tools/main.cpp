#include <string>
#include <vector>

#include "scenforge/cli/commands.hpp"

int main(int argc, char ** argv)
{
  const std::vector<std::string> args(argv + 1, argv + argc);
  return scenforge::cli::run_cli(args);
}
