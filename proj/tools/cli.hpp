#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace txpredict::cli {

enum ExitCode : int { kSat = 0, kUnsat = 1, kConfigError = 2, kUnknown = 3 };

/// Runs the driver on `args` (args[0] is the program name). Normal output goes
/// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace txpredict::cli
