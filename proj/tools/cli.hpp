#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace econet::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,  // unexpected internal error
  kConfigError = 2,
  kDataError = 3,
  kNumericError = 4,
};

/// Environment variables that override config-file values, e.g.
/// ECONET_BATCH_SIZE for batch_size and ECONET_ARCH_FILTERS for arch.filters.
inline constexpr const char* kEnvPrefix = "ECONET_";

/// Runs one command. `args` excludes the program name. `env` is consulted
/// for ECONET_* overrides.
int run(const std::vector<std::string>& args, const std::map<std::string, std::string>& env,
        std::ostream& out, std::ostream& err);

/// Snapshot of ECONET_* variables from the process environment.
std::map<std::string, std::string> process_environment();

}  // namespace econet::cli
