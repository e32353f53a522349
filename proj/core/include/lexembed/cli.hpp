#pragma once

#include <string>
#include <vector>

namespace lexembed::cli {

// Parses and executes one command. `args` holds the command-line arguments
// without the program name. Returns the process exit code: 0 on success
// (including --help), 2 for usage and configuration errors, 1 for runtime
// failures.
int run(std::vector<std::string> args);

}  // namespace lexembed::cli
