#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace hsps::cli {

enum ExitCode : int { exit_ok = 0, exit_validation = 2, exit_no_convergence = 3, exit_io = 4 };

struct CommandOptions {
  /// simulate, scan, calibrate, optimize-window, klyshko, analyze, or run
  /// (the scenario's own mode).
  std::string verb = "run";
  std::optional<std::filesystem::path> scenario;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = ".";
  unsigned threads = 1;
  std::optional<std::filesystem::path> input;  // analyze
  std::optional<double> integration_time_s;    // analyze
};

/// Runs one verb, writing artifacts under `options.out`. Progress goes to
/// `log`, warnings and errors to `err`. Returns an ExitCode.
int run_command(const CommandOptions& options, std::ostream& log, std::ostream& err);

}  // namespace hsps::cli
