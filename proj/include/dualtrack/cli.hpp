#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "dualtrack/config.hpp"

namespace dualtrack {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitDataError = 3,
  kExitBackendFailure = 4,
  kExitUnsolved = 5,
};

// Entry point behind the dualtrack executable. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env);

}  // namespace dualtrack
