#pragma once

#include <iosfwd>

namespace gtsne::cli {

enum ExitCode : int {
  kOk = 0,
  kMalformedInput = 1,
  kInvalidFlags = 2,
  kTrainingFailure = 3,
};

/// Entry point for the `graphtsne` tool: subcommands fit, sweep, evaluate.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gtsne::cli
