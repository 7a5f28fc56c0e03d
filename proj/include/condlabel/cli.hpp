#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace condlabel::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInternalError = 1,
  kUsageError = 2,
  kDataError = 3,
  kToleranceFailure = 4,
};

/// Runs the command line `args` (args[0] is the program name). Normal output
/// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace condlabel::cli
