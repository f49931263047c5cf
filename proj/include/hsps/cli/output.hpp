#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsps/analysis/calibrate.hpp"
#include "hsps/analysis/klyshko.hpp"
#include "hsps/analysis/optimize.hpp"
#include "hsps/analysis/scan.hpp"
#include "hsps/detection.hpp"
#include "hsps/emission.hpp"

namespace hsps::cli {

/// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Streams rows to a temp file; commit() renames it into place. Dropped
/// without commit, the temp file is removed.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path);
  ~AtomicFile();
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;

  void write(std::string_view text);
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path temp_;
  std::FILE* file_ = nullptr;
};

/// Shortest round-trip text for a double.
std::string format_number(double v);

// Every CSV starts with a `# hsps <kind> v<N>` schema line, then a header row.
std::string counts_csv(const std::vector<std::pair<bool, CountsSummary>>& rows, double power_mw);
std::string scan_csv(const analysis::ScanResult& scan, double power_mw);
std::string klyshko_csv(const std::vector<analysis::KlyshkoRow>& rows);
std::string calibration_csv(const analysis::CalibrationTarget& fit, bool converged);
std::string window_csv(const analysis::WindowOptimum& w);

std::string emission_csv_header();
std::string emission_csv_row(const EmissionRecord& r);
std::string detection_csv_header(double integration_time_s);
std::string detection_csv_row(const DetectionEvent& e);

/// Human-readable block for one CountsSummary. `rescale_s` adds the counts
/// scaled to another integration time.
std::string counts_report(std::string_view title, const CountsSummary& counts, double power_mw,
                          double signal_qe, std::optional<double> rescale_s);

}  // namespace hsps::cli
