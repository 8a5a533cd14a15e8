#pragma once

#include <string>
#include <vector>

namespace convex_order::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitNumericalFailure = 2,
  kExitViolation = 3,
};

/// Parses `args` (without the program name), runs one subcommand and
/// returns its exit code. Never throws.
int run(const std::vector<std::string>& args);

}  // namespace convex_order::cli
