#pragma once

#include "hsps/analysis/metrics.hpp"
#include "hsps/analysis/pipeline.hpp"
#include "hsps/setup.hpp"

namespace hsps::analysis {

struct WindowSearch {
  double center_min_nm = 781.0;
  double center_max_nm = 821.0;
  double center_step_nm = 0.5;
  double width_min_nm = 1.0;
  double width_max_nm = 60.0;
  double width_step_nm = 0.5;
  double efficiency_floor = 0.51;

  void validate() const;
};

struct WindowOptimum {
  double center_nm = 0.0;
  double window_nm = 0.0;
  double analytic_efficiency = 0.0;
  double analytic_brightness = 0.0;
  /// Simulated check at the optimum (gated counts).
  RunCounts counts;
  EfficiencyReport report;
};

/// Grid search over trigger-slit (center, window) maximizing the analytic
/// gated brightness subject to conditional efficiency >= floor. The setup's
/// trigger slit supplies the resolution. Throws InfeasibleError if no grid
/// point meets the floor.
WindowOptimum optimize_window(const Setup& calibrated, const WindowSearch& search,
                              const RunOptions& options);

}  // namespace hsps::analysis
