#pragma once

#include "hsps/electronics.hpp"

namespace hsps::analysis {

/// Coincidences over gated trigger singles. Throws UndefinedRatioError when
/// s_trigger is zero.
double conditional_efficiency(const CountsSummary& counts);

struct PreparationEfficiency {
  double value = 0.0;
  bool capped = false;  // raw ratio exceeded 1
};

/// Conditional efficiency with the signal detector's quantum efficiency
/// divided out.
PreparationEfficiency preparation_efficiency(double conditional_efficiency, double signal_qe);

/// Coincidences per second per mW of coupled pump power.
double brightness(const CountsSummary& counts, double power_mw);

struct EfficiencyReport {
  double conditional_efficiency = 0.0;
  PreparationEfficiency preparation_efficiency;
  double brightness = 0.0;
  double accidentals_fraction = 0.0;
};

EfficiencyReport efficiency_report(const CountsSummary& counts, double power_mw, double signal_qe);

/// Poisson (binomial) standard error of conditional_efficiency.
double efficiency_sigma(const CountsSummary& counts);

}  // namespace hsps::analysis
