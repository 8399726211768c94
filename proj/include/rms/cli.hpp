#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rms::cli {

enum ExitCode { ok = 0, usage = 1, validation = 2, runtime = 3 };

/// Runs one command line (without the program name). Output files are written as a side effect.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rms::cli
