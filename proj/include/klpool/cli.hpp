#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace klpool::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kEmptyIntersection = 2,
  kNonConvergence = 3,
};

/// Runs one command. args[0] is the program name. Tabular output goes to the
/// --output file, or to `out` when none is given; messages go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace klpool::cli
