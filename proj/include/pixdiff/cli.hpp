#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pixdiff::cli {

enum ExitCode : int { kSuccess = 0, kCheckFailed = 1, kUsage = 2 };

/// Runs `pixdiff <command> ...`. args excludes the program name. Reports go
/// to --out when given, otherwise to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace pixdiff::cli
