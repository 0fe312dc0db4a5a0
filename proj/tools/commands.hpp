#pragma once

#include <iosfwd>

namespace glarify::cli {

/// Exit codes of the glarify command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitService = 3;

/// Parses argv, runs one subcommand and maps errors to exit codes.
/// Human-readable output goes to `out`, diagnostics to `err`.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace glarify::cli
