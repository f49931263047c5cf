#include "hsps/analysis/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "hsps/errors.hpp"

namespace hsps::analysis {

double conditional_efficiency(const CountsSummary& counts) {
  if (counts.s_trigger == 0)
    throw UndefinedRatioError("conditional efficiency is undefined without trigger counts");
  return static_cast<double>(counts.coincidences) / static_cast<double>(counts.s_trigger);
}

PreparationEfficiency preparation_efficiency(double eta_c, double signal_qe) {
  if (!(signal_qe > 0.0 && signal_qe <= 1.0))
    throw ValidationError(fmt::format("signal quantum efficiency {} outside (0, 1]", signal_qe));
  const double raw = eta_c / signal_qe;
  if (raw > 1.0) return {1.0, true};
  return {raw, false};
}

double brightness(const CountsSummary& counts, double power_mw) {
  if (!(power_mw > 0.0)) throw ValidationError("brightness needs a positive pump power");
  if (!(counts.integration_time_s > 0.0))
    throw ValidationError("brightness needs a positive integration time");
  return static_cast<double>(counts.coincidences) / (counts.integration_time_s * power_mw);
}

EfficiencyReport efficiency_report(const CountsSummary& counts, double power_mw, double signal_qe) {
  EfficiencyReport r;
  r.conditional_efficiency = conditional_efficiency(counts);
  r.preparation_efficiency = preparation_efficiency(r.conditional_efficiency, signal_qe);
  r.brightness = brightness(counts, power_mw);
  r.accidentals_fraction = counts.coincidences > 0
                               ? counts.accidentals_analytic / static_cast<double>(counts.coincidences)
                               : 0.0;
  return r;
}

double efficiency_sigma(const CountsSummary& counts) {
  if (counts.s_trigger == 0) return INFINITY;
  const double n = static_cast<double>(counts.s_trigger);
  const double eta = static_cast<double>(counts.coincidences) / n;
  return std::sqrt(std::max(eta * (1.0 - eta), 1.0 / n) / n);
}

}  // namespace hsps::analysis
