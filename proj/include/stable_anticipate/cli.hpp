#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sa::cli {

enum ExitCode : int { ok = 0, validation_failure = 1, usage = 2, numerical = 3 };

/// Runs the command line `args` (args[0] is the program name). Results go to
/// `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Round-trip decimal form used in every CSV and JSON field: 17 significant digits.
std::string format_number(double v);

}  // namespace sa::cli
