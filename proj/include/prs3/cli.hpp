#pragma once

#include <ostream>

namespace prs3::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kSuccess = 0, kComputationFailure = 1, kUsageError = 2 };

/// Entry point of the `prs3` tool. Subcommands: parasitic, stiffness, trajectory.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prs3::cli
