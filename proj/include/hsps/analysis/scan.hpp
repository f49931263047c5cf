#pragma once

#include <vector>

#include "hsps/analysis/pipeline.hpp"
#include "hsps/analysis/rate_model.hpp"
#include "hsps/setup.hpp"
#include "hsps/spectra.hpp"

namespace hsps::analysis {

struct ScanPlan {
  SlitCalibration calibration;
  std::vector<double> positions_um;
  double slit_width_um = 40.0;
  double resolution_nm = 2.0;

  void validate() const;
  double window_nm() const;
};

enum class GateSelection { both, gated, ungated };

struct ScanRow {
  double slit_center_nm = 0.0;
  double window_nm = 0.0;
  bool gated = false;
  CountsSummary counts;
};

struct ScanResult {
  std::vector<ScanRow> rows;
};

/// One simulated run per slit position. Every position reuses the same seed,
/// and the gated and ungated rows of a position count the same detections.
ScanResult spectral_scan(const Setup& base, const ScanPlan& plan, GateSelection selection,
                         const RunOptions& options, unsigned threads = 1);

/// Analytic counterpart of spectral_scan (expected counts, not rounded).
struct AnalyticScanRow {
  double slit_center_nm = 0.0;
  double window_nm = 0.0;
  AnalyticRates rates;
};

std::vector<AnalyticScanRow> analytic_scan(const Setup& base, const ScanPlan& plan);

}  // namespace hsps::analysis
