#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qmem::cli {

// Full CLI entry point: parses args (without argv[0]), runs the requested
// subcommand, prints a JSON summary to out. Returns the process exit code:
// 0 success, 1 usage, 2 config/input validation, 3 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qmem::cli
