#ifndef COS2PHI_CLI_HPP
#define COS2PHI_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace cos2phi {

// Runs one command line (args excludes the program name). Returns the exit
// code: 0 success, 2 usage, 3 validation, 4 numerical failure. Errors are
// written to `err` as one JSON object.
int run_command(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace cos2phi

#endif  // COS2PHI_CLI_HPP
