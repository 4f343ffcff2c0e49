#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gmeta {

/// Exit codes: 0 ok, 1 usage/parse/io, 2 governance rejection, 3 run
/// failure, 4 audit failure.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRejected = 2, kExitRunFailed = 3, kExitAudit = 4 };

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gmeta
