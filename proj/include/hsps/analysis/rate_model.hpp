#pragma once

#include "hsps/electronics.hpp"
#include "hsps/setup.hpp"

namespace hsps::analysis {

/// Fraction of prompt clicks (pulse time + gaussian jitter) that pass the gate.
double gated_fraction_prompt(const GateConfig& gate, double rep_rate_hz, double jitter_sigma_ns);

/// Fraction of clicks delayed by Exponential(lifetime) + gaussian jitter, in
/// steady state over the pulse train, that pass the gate.
double gated_fraction_exponential(const GateConfig& gate, double rep_rate_hz, double lifetime_ns,
                                  double jitter_sigma_ns);

/// P(|jitter_s - jitter_t| <= window).
double coincidence_capture(double window_ns, double sigma_trigger_ns, double sigma_signal_ns);

/// First-order (low occupancy, no dead time) expected rates in counts/s.
struct AnalyticRates {
  double trigger_gated = 0.0;
  double trigger_ungated = 0.0;
  double signal = 0.0;
  double true_coincidences_gated = 0.0;
  double true_coincidences_ungated = 0.0;
  double rep_rate_hz = 0.0;

  double coincidences(bool gated) const;
  double trigger(bool gated) const { return gated ? trigger_gated : trigger_ungated; }
  /// Includes the accidental pileup term. Zero when there are no triggers.
  double efficiency(bool gated) const;
};

AnalyticRates analytic_rates(const Setup& setup);

/// Factors of analytic_rates that do not depend on the source's mean numbers
/// or fluorescence lifetime. Lets a parameter search skip the spectral
/// integrals.
struct RateGeometry {
  double trigger_flat = 0.0;
  double signal_flat = 0.0;
  double pdc_capture = 0.0;    // trigger photons of a type-II pair through the slit
  double type1_capture = 0.0;  // photons of a type-I pair through the slit, if V
  double fluor_capture = 0.0;
  double prompt_gate = 0.0;
  double coincidence_capture = 0.0;
};

RateGeometry rate_geometry(const Setup& setup);
AnalyticRates analytic_rates(const Setup& setup, const RateGeometry& geometry);

}  // namespace hsps::analysis
