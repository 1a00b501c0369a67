#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace levyforge::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

/// Runs one command. `args` excludes the program name. Progress and the run
/// directory go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace levyforge::cli
