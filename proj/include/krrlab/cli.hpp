#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace krrlab::cli {

/// Exit codes: 0 success, 1 usage error, 2 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

/// Parses `args` (without the program name) and runs the subcommand.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Library version string embedded in run summaries.
const char* version();

}  // namespace krrlab::cli
