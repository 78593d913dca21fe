#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dbtab::cli {

enum ExitCode { kOk = 0, kInconsistent = 1, kUsage = 2, kResource = 3 };

// argv[0] is the program name. Output goes to out, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dbtab::cli
