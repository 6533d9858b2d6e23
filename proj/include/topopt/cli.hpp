#pragma once

#include <cstdint>
#include <iosfwd>

namespace topopt {

/// Exit codes of the command-line driver.
enum ExitCode : int { exit_ok = 0, exit_config_error = 1, exit_solver_failure = 2 };

/// Entry point of the `topopt` tool: subcommands `run`, `cases`, `check`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Quick invariant battery used by `topopt check`. Prints one line per check
/// and returns the number of failures.
int run_self_check(std::uint64_t seed, std::ostream& out);

}  // namespace topopt
