#pragma once

#include <string>
#include <vector>

namespace tspmgs {

/// Exit codes returned by run_cli for library errors.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInput = 2,
  kExitConfig = 3,
  kExitNumeric = 4,
  kExitBackend = 5,
  kExitCorrelation = 6,
};

/// Entry point of the `tspmgs` command-line tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace tspmgs
