#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace reqqa {

/// Exit codes: 0 success, 1 domain error, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line (without the program name) and returns the exit
/// code. Results go to `out`; diagnostics and usage to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace reqqa
