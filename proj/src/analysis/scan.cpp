#include "hsps/analysis/scan.hpp"

#include <cmath>

#include "hsps/analysis/rate_model.hpp"
#include "hsps/errors.hpp"
#include "hsps/parallel.hpp"

namespace hsps::analysis {
namespace {

Setup with_slit(const Setup& base, const ScanPlan& plan, double position_um) {
  Setup s = base;
  s.trigger_arm.slit =
      SlitFilter{plan.calibration.to_wavelength(position_um), plan.window_nm(), plan.resolution_nm};
  return s;
}

}  // namespace

void ScanPlan::validate() const {
  calibration.validate();
  if (positions_um.empty()) throw ValidationError("scan needs at least one slit position");
  if (!(slit_width_um >= 0.0)) throw ValidationError("slit_width_um must be >= 0");
  if (!(resolution_nm > 0.0)) throw ValidationError("resolution_nm must be > 0");
  for (double p : positions_um)
    if (!(calibration.to_wavelength(p) > 0.0))
      throw ValidationError("slit position maps to a non-positive wavelength");
}

double ScanPlan::window_nm() const { return slit_width_um * std::abs(calibration.nm_per_um); }

ScanResult spectral_scan(const Setup& base, const ScanPlan& plan, GateSelection selection,
                         const RunOptions& options, unsigned threads) {
  base.validate();
  plan.validate();
  std::vector<RunCounts> runs(plan.positions_um.size());
  RunOptions point_options = options;
  point_options.on_emission = nullptr;
  point_options.on_detection = nullptr;
  parallel_for(runs.size(), threads, [&](std::size_t i) {
    runs[i] = simulate_counts(with_slit(base, plan, plan.positions_um[i]), point_options);
  });

  ScanResult result;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const double center = plan.calibration.to_wavelength(plan.positions_um[i]);
    if (selection != GateSelection::gated)
      result.rows.push_back({center, plan.window_nm(), false, runs[i].ungated});
    if (selection != GateSelection::ungated)
      result.rows.push_back({center, plan.window_nm(), true, runs[i].gated});
  }
  return result;
}

std::vector<AnalyticScanRow> analytic_scan(const Setup& base, const ScanPlan& plan) {
  base.validate();
  plan.validate();
  std::vector<AnalyticScanRow> rows;
  rows.reserve(plan.positions_um.size());
  for (double p : plan.positions_um) {
    const Setup s = with_slit(base, plan, p);
    rows.push_back({s.trigger_arm.slit->center_nm, plan.window_nm(), analytic_rates(s)});
  }
  return rows;
}

}  // namespace hsps::analysis
