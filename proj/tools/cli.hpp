#pragma once

#include <string>
#include <vector>

namespace grassproj::cli {

enum ExitCode : int { kPass = 0, kFail = 1, kUsage = 2, kRefused = 3 };

/// Runs the command line `args` (args[0] is the program name) and returns the
/// exit code. Messages go to stdout and errors to stderr.
int run(const std::vector<std::string>& args);

}  // namespace grassproj::cli
