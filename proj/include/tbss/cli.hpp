#pragma once

#include <iosfwd>

namespace tbss {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitParse = 1,
    kExitNumerical = 2,
    kExitIdentifiability = 3,
};

/// Runs one `tbss` command. Results go to `out` (or the --out file),
/// diagnostics and warnings to `err`; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tbss
