#pragma once

#include <iosfwd>

namespace roomloc::cli {

/// Exit codes; stable contract.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kValidation = 2,
  kDiverged = 3,
  kMismatch = 4,
  kAlignment = 5,
};

/// Entry point shared by the executable and the in-process tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace roomloc::cli
