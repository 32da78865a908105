#ifndef PTROBUST_RUNNER_HPP_
#define PTROBUST_RUNNER_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ptrobust/config.hpp"

namespace ptrobust {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 1,
  kExitNumericalFailure = 2,
  kExitPropertyFailed = 3,
};

struct RunResult {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> artifacts;
  std::string summary;
};

/// Executes the configured scenario and writes its CSV, summary and optional
/// SVG under config.output_dir. Diagnostics go to `diag`.
RunResult run(const ExperimentConfig& config, std::ostream& diag);

/// Fixed deterministic suite covering every scenario plus the oracle check.
/// Exit code 0 when every case produced its expected exit code.
RunResult run_selftest(const std::filesystem::path& dir, std::uint64_t seed,
                       std::ostream& diag);

}  // namespace ptrobust

#endif  // PTROBUST_RUNNER_HPP_
