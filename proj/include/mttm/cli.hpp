#pragma once

#include <ostream>

namespace mttm {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitParse = 1, kExitValidation = 2, kExitNumerical = 3 };

/// Entry point of the `mttm` tool with injectable streams.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mttm
