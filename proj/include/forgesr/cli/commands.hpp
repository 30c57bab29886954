#pragma once

#include <iosfwd>

namespace forgesr::cli {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,       // bad flags, config, or arguments
  kExitValidation = 2,  // a persisted artifact failed validation
  kExitRuntime = 3,     // training failure, lock contention, I/O
};

/// Entry point of the `forgesr` tool. Failures print one line of the form
///   forgesr-error code=<n> kind=<kind> [index=<i>] message=<json string>
/// to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace forgesr::cli
