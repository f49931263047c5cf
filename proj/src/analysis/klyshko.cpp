#include "hsps/analysis/klyshko.hpp"

#include <cmath>

#include <fmt/format.h>

#include "hsps/analysis/metrics.hpp"
#include "hsps/analysis/rate_model.hpp"
#include "hsps/errors.hpp"
#include "hsps/parallel.hpp"

namespace hsps::analysis {

std::vector<KlyshkoRow> klyshko_check(const Setup& setup, std::span<const double> transmittances,
                                      double pairs_per_point, const RunOptions& options,
                                      unsigned threads) {
  setup.validate();
  const SourceConfig& src = setup.source;
  const double m2 = src.mean_pairs_per_pulse();
  if (!(m2 > 0.0) || m2 > 1.0e-3)
    throw ValidationError(fmt::format(
        "heralding check needs 0 < mean pairs per pulse <= 1e-3, got {:.3g}", m2));
  if (src.mu_type1 > 0.0 || src.mu_fluor > 0.0 || setup.trigger_arm.detector.dark_rate_hz > 0.0 ||
      setup.signal_arm.detector.dark_rate_hz > 0.0)
    throw ValidationError("heralding check needs all background sources switched off");
  if (!(pairs_per_point > 0.0)) throw ValidationError("pairs_per_point must be positive");
  for (double t : transmittances)
    if (!(t >= 0.0 && t <= 1.0))
      throw ValidationError(fmt::format("trigger transmittance {} outside [0, 1]", t));

  const bool gated = setup.gate.gating_enabled;
  std::vector<KlyshkoRow> rows(transmittances.size());
  RunOptions point_options = options;
  point_options.on_emission = nullptr;
  point_options.on_detection = nullptr;
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    Setup s = setup;
    s.source.integration_time_s = pairs_per_point / (src.rep_rate_hz * m2);
    s.trigger_arm.optics_transmission = transmittances[i];
    s.trigger_arm.fiber_coupling = 1.0;
    s.trigger_arm.detector.quantum_efficiency = 1.0;
    s.trigger_arm.slit.reset();

    const RunCounts run = simulate_counts(s, point_options);
    KlyshkoRow& row = rows[i];
    row.trigger_transmittance = transmittances[i];
    row.counts = gated ? run.gated : run.ungated;
    row.efficiency = row.counts.s_trigger > 0 ? conditional_efficiency(row.counts) : NAN;
    row.sigma = efficiency_sigma(row.counts);
    const RateGeometry g = rate_geometry(s);
    row.analytic = g.signal_flat * g.coincidence_capture;
  });
  return rows;
}

}  // namespace hsps::analysis
