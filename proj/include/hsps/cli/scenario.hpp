#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hsps/analysis/calibrate.hpp"
#include "hsps/analysis/optimize.hpp"
#include "hsps/analysis/scan.hpp"
#include "hsps/setup.hpp"

namespace hsps::cli {

enum class Mode { counts, scan, calibrate, optimize, klyshko, analyze };

std::string_view to_string(Mode m);

struct KlyshkoPlan {
  std::vector<double> trigger_transmittances{1.0, 0.5, 0.1};
  double pairs_per_point = 1.0e5;
};

struct AnalyzePlan {
  std::filesystem::path input;  // relative paths resolve against the scenario file
  std::optional<double> integration_time_s;
};

struct Scenario {
  std::string name;
  Mode mode = Mode::counts;
  std::optional<std::uint64_t> seed;  // --seed may supply it instead
  Setup setup;
  /// Counts in the report are also shown rescaled to this integration time.
  std::optional<double> report_time_s;

  analysis::ScanPlan scan;
  analysis::CalibrationRequest calibration;  // base is filled from setup
  analysis::WindowSearch window;
  KlyshkoPlan klyshko;
  AnalyzePlan analyze;

  bool dump_emission = false;
  bool dump_detection = false;

  void validate() const;
};

/// Parses a YAML scenario. `origin` names the source in error messages and
/// anchors relative paths. Throws ParseError (line and field) for malformed
/// input and ValidationError for out-of-range physics.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& origin = {});

Scenario load_scenario(const std::filesystem::path& path);

}  // namespace hsps::cli
