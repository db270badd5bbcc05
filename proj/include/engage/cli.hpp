#ifndef ENGAGE_CLI_HPP
#define ENGAGE_CLI_HPP

#include <string>
#include <vector>

namespace engage {

// Runs one CLI invocation (args exclude the program name) and returns
// the process exit code: 0 success, 1 validation error, 2 numeric
// failure, 3 I/O error. Exposed as a function so tests can drive the
// commands in-process.
int cli_run(const std::vector<std::string>& args);

} // namespace engage

#endif
