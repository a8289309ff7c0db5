#pragma once

#include <ostream>

namespace ztd::cli {

/// Exit codes of the command-line front end.
enum ExitCode : int { kOk = 0, kError = 1, kNotConverged = 2 };

/// Parses `argv` and runs one subcommand (train, train-robust, adapt, eval,
/// sweep, ingest-histogram). Errors are reported on `err` as a single line
/// `error kind=<Kind> message=<text>`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ztd::cli
