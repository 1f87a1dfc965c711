#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace diftrans::cli {

/// Runs one command line (without the program name). Reports go to `out`
/// unless --output is given; diagnostics go to `err`.
/// Exit codes: 0 success, 1 module or I/O error, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace diftrans::cli
