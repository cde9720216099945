#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace koopman::cli {

/// Exit codes: 0 success, 2 condition or certificate failure, 1 runtime or
/// configuration error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitCondition = 2;

/// Parses `args` (without the program name) and runs one subcommand. Human
/// tables go to `out`, diagnostics to `err`; JSON/CSV artifacts to --out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace koopman::cli
