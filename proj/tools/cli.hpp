#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace memirl::cli {

enum ExitCode : int {
    kOk = 0,
    kVerificationFailed = 1,
    kValidationError = 2,
    kRuntimeError = 3,
};

/// Runs one command line (without the program name). Human output goes to
/// `out`, diagnostics to `err`; the return value is the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace memirl::cli
