#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sysrisk::cli {

struct RunSpec {
  std::string scenario;
  std::string command = "report";
  std::uint64_t seed = 1;
  std::uint64_t replications = 100000;
  std::optional<double> epsilon;
  /// auto, analytic, pathwise or mc.
  std::string backend = "auto";
  std::string out;
  std::size_t subset_size = 0;
  bool destructive = false;
  unsigned threads = 0;
  std::size_t grid = 20;
  std::size_t k_min = 2;
  std::size_t k_max = 30;
};

struct CommandResult {
  std::string csv;
  /// 0 success, 1 a check failed, 2 bad input.
  int exit_code = 0;
  std::vector<std::string> diagnostics;
};

CommandResult cmd_report(const RunSpec& run);
CommandResult cmd_figure1(const RunSpec& run);
CommandResult cmd_ksweep(const RunSpec& run);
CommandResult cmd_bounds(const RunSpec& run);
CommandResult cmd_cstatics(const RunSpec& run);
CommandResult cmd_validate(const RunSpec& run);

/// Dispatches on run.command; unknown commands and thrown errors become
/// exit code 2 with a diagnostic.
CommandResult run_command(const RunSpec& run);

/// Bank rates of one figure1 series: U[4e-5, 6e-5] draws keyed by (seed, series).
std::vector<double> figure1_alphas(std::uint64_t seed, std::size_t series, std::size_t banks = 3);

/// Scientific notation with 12 significant digits; empty for no value.
std::string format_number(std::optional<double> value);

}  // namespace sysrisk::cli
