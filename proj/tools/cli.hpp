#ifndef RECURNET_TOOLS_CLI_HPP
#define RECURNET_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace recurnet::cli {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kNumericError = 3 };

/// Runs one command line (without the program name). Never throws; errors
/// are reported on `err` and mapped to exit codes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace recurnet::cli

#endif  // RECURNET_TOOLS_CLI_HPP
