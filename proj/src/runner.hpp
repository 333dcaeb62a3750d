#pragma once

#include <cstdint>
#include <string>

namespace robinflux {

// Command-line overrides; zero/empty means "take the config value".
struct RunnerOverrides {
  std::string out;
  uint64_t seed = 0;
  int jobs = 0;
  double accept_const = 0.0;  // overrides the factor-style check constants
  bool resume = false;        // flux: reuse cached solves
};

// Executes one subcommand against a JSON config and returns the process
// exit code: 0 all checks pass, 1 infrastructure/config error, 2 a
// theorem-level check failed.  `report` works from --out alone.
int run_command(const std::string& command, const std::string& config_path,
                const RunnerOverrides& ov = {});

}  // namespace robinflux
