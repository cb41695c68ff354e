#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace segzero::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,   // anything not listed below
  kUsage = 2,     // bad flags or an invalid configuration
  kIo = 3,        // a file could not be read, parsed or written
  kNonFinite = 4, // training produced a non-finite loss or gradient
  kBackend = 5,   // the segmentation backend failed or timed out
};

/// Runs `segzero <subcommand> ...`. argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// Same, with the arguments after the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace segzero::cli
