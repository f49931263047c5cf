#include "hsps/analysis/optimize.hpp"

#include <cmath>

#include <fmt/format.h>

#include "hsps/analysis/rate_model.hpp"
#include "hsps/errors.hpp"

namespace hsps::analysis {
namespace {

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> v;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) v.push_back(lo + static_cast<double>(i) * step);
  return v;
}

}  // namespace

void WindowSearch::validate() const {
  if (!(center_step_nm > 0.0) || !(width_step_nm > 0.0))
    throw ValidationError("window search steps must be positive");
  if (!(center_max_nm >= center_min_nm) || !(center_min_nm > 0.0))
    throw ValidationError("window search center range is empty or non-positive");
  if (!(width_max_nm >= width_min_nm) || !(width_min_nm >= 0.0))
    throw ValidationError("window search width range is empty or negative");
  if (!(efficiency_floor >= 0.0 && efficiency_floor < 1.0))
    throw ValidationError(fmt::format("efficiency floor {} outside [0, 1)", efficiency_floor));
}

WindowOptimum optimize_window(const Setup& calibrated, const WindowSearch& search,
                              const RunOptions& options) {
  calibrated.validate();
  search.validate();
  const double power = calibrated.source.coupled_pump_power_mw;
  if (!(power > 0.0)) throw ValidationError("window optimization needs a positive pump power");
  const double resolution =
      calibrated.trigger_arm.slit ? calibrated.trigger_arm.slit->resolution_nm : 2.0;

  Setup trial = calibrated;
  bool found = false;
  double best_brightness = -1.0;
  double best_efficiency_any = 0.0;
  WindowOptimum best;
  for (double center : grid(search.center_min_nm, search.center_max_nm, search.center_step_nm)) {
    for (double width : grid(search.width_min_nm, search.width_max_nm, search.width_step_nm)) {
      trial.trigger_arm.slit = SlitFilter{center, width, resolution};
      const AnalyticRates rates = analytic_rates(trial, rate_geometry(trial));
      const double eta = rates.efficiency(true);
      best_efficiency_any = std::max(best_efficiency_any, eta);
      if (eta < search.efficiency_floor) continue;
      const double b = rates.coincidences(true) / power;
      if (b > best_brightness) {
        found = true;
        best_brightness = b;
        best.center_nm = center;
        best.window_nm = width;
        best.analytic_efficiency = eta;
        best.analytic_brightness = b;
      }
    }
  }
  if (!found)
    throw InfeasibleError(
        fmt::format("no window reaches conditional efficiency {:.4f}; best achievable is {:.4f}",
                    search.efficiency_floor, best_efficiency_any),
        best_efficiency_any);

  trial.trigger_arm.slit = SlitFilter{best.center_nm, best.window_nm, resolution};
  RunOptions run = options;
  best.counts = simulate_counts(trial, run);
  if (best.counts.gated.s_trigger > 0)
    best.report = efficiency_report(best.counts.gated, power,
                                    calibrated.signal_arm.detector.quantum_efficiency);
  return best;
}

}  // namespace hsps::analysis
