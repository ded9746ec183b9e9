#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cfm::cli {

/// Process exit codes. Each failure also prints one line
/// "error[<category>]: <message>" to the error stream.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,  // internal
  kUsage = 2,     // usage: bad flags or values
  kIo = 3,        // io: unreadable or unwritable file
  kFormat = 4,    // format: malformed container or header mismatch
  kShape = 5,     // shape: dimension mismatch between inputs
  kConfig = 6,    // config: invalid parameters
  kData = 7,      // data: invalid numeric content
};

/// Runs the cfm command line on `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cfm::cli
