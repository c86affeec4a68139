#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace relate::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kNumericalError = 2 };

// Runs the tool in-process. `args` excludes the program name. Reports go to
// the --out paths, one-line summaries to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace relate::cli
