#pragma once

#include <cstdint>
#include <optional>

#include "hsps/analysis/pipeline.hpp"
#include "hsps/errors.hpp"
#include "hsps/setup.hpp"

namespace hsps::analysis {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

struct CalibrationBounds {
  Interval mu_fluor{0.0, 100.0};
  Interval fluor_lifetime_ns{0.01, 1.0e5};
  Interval mu_type1{0.0, 100.0};
};

struct CalibrationRequest {
  Setup base;  // mu_pairs and all optics are held fixed
  double eta_ungated = 0.204;
  double eta_gated = 0.515;
  CalibrationBounds bounds;
  double tolerance = 0.01;
  int max_iterations = 20000;
  int max_restarts = 8;
  bool verify = true;
  double verify_time_s = 5.0;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct CalibrationTarget {
  double eta_ungated = 0.0;
  double eta_gated = 0.0;
  double mu_fluor = 0.0;
  double fluor_lifetime_ns = 0.0;
  double mu_type1 = 0.0;
  double mu_pairs = 0.0;
  /// Largest absolute efficiency error of the analytic fit.
  double residual = 0.0;
  double analytic_ungated = 0.0;
  double analytic_gated = 0.0;
  int iterations = 0;
  std::optional<RunCounts> verification;
};

/// Thrown when no parameter set meets the tolerance; `best()` is the closest
/// point found.
class CalibrationError : public NoConvergenceError {
 public:
  CalibrationError(const std::string& what, CalibrationTarget best)
      : NoConvergenceError(what, best.residual), best_(std::move(best)) {}

  const CalibrationTarget& best() const { return best_; }

 private:
  CalibrationTarget best_;
};

/// Fits (mu_fluor, fluor_lifetime, mu_type1) so the analytic gated and
/// ungated conditional efficiencies hit the targets, then re-checks the fit
/// by simulation.
CalibrationTarget calibrate(const CalibrationRequest& request);

/// `base` with the fitted background parameters applied.
Setup apply_calibration(Setup base, const CalibrationTarget& fit);

}  // namespace hsps::analysis
