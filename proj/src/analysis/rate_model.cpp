#include "hsps/analysis/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hsps::analysis {
namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_normal_cdf(double z) { return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2)); }

// CDF of Exponential(tau) + Normal(0, sigma).
double exgauss_cdf(double x, double tau, double sigma) {
  if (sigma == 0.0) return x <= 0.0 ? 0.0 : -std::expm1(-x / tau);
  const double z = x / sigma;
  const double r = sigma / tau;
  const double tail = std::exp(-x / tau + 0.5 * r * r + log_normal_cdf(z - r));
  return std::clamp(normal_cdf(z) - tail, 0.0, 1.0);
}

}  // namespace

double gated_fraction_prompt(const GateConfig& gate, double rep_rate_hz, double sigma) {
  const double period = 1.0e9 / rep_rate_hz;
  if (gate.gate_width_ns >= period) return 1.0;
  if (sigma == 0.0) return gate_pass(0.0, rep_rate_hz, gate) ? 1.0 : 0.0;
  const auto reach = static_cast<long>(std::ceil(12.0 * sigma / period)) + 2;
  // Shift the window phase into [0, period) so the sum is centered on k = 0.
  double d = std::fmod(gate.gate_delay_ns, period);
  if (d > 0.5 * period) d -= period;
  double sum = 0.0;
  for (long k = -reach; k <= reach; ++k) {
    const double a = static_cast<double>(k) * period + d;
    sum += normal_cdf((a + gate.gate_width_ns) / sigma) - normal_cdf(a / sigma);
  }
  return std::clamp(sum, 0.0, 1.0);
}

double gated_fraction_exponential(const GateConfig& gate, double rep_rate_hz, double tau,
                                  double sigma) {
  const double period = 1.0e9 / rep_rate_hz;
  const double w = gate.gate_width_ns;
  if (w >= period) return 1.0;
  double d = std::fmod(gate.gate_delay_ns, period);
  if (d < 0.0) d += period;  // window start within [0, period)

  // Windows [kT + d, kT + d + w). Below k_lo the delay has no support; past
  // x_far both normal CDFs are 1 to double precision and a geometric series
  // gives the rest exactly.
  const double x_far = 12.0 * sigma + sigma * sigma / tau;
  const auto k_lo = static_cast<long>(std::floor((-12.0 * sigma - d - w) / period));
  const auto k_hi = std::max(k_lo, static_cast<long>(std::ceil((x_far - d) / period)));
  double sum = 0.0;
  for (long k = k_lo; k <= k_hi; ++k) {
    const double a = static_cast<double>(k) * period + d;
    sum += exgauss_cdf(a + w, tau, sigma) - exgauss_cdf(a, tau, sigma);
  }
  const double r = sigma / tau;
  const double first = static_cast<double>(k_hi + 1) * period + d;
  sum += std::exp(0.5 * r * r - first / tau) * -std::expm1(-w / tau) / -std::expm1(-period / tau);
  return std::clamp(sum, 0.0, 1.0);
}

double coincidence_capture(double window_ns, double sigma_trigger_ns, double sigma_signal_ns) {
  const double s = std::hypot(sigma_trigger_ns, sigma_signal_ns);
  if (s == 0.0) return 1.0;
  return std::erf(window_ns / (s * std::numbers::sqrt2));
}

double AnalyticRates::coincidences(bool gated) const {
  const double accidental = rep_rate_hz > 0.0 ? trigger(gated) * signal / rep_rate_hz : 0.0;
  return (gated ? true_coincidences_gated : true_coincidences_ungated) + accidental;
}

double AnalyticRates::efficiency(bool gated) const {
  const double t = trigger(gated);
  return t > 0.0 ? coincidences(gated) / t : 0.0;
}

RateGeometry rate_geometry(const Setup& setup) {
  const SourceConfig& src = setup.source;
  RateGeometry g;
  g.trigger_flat = arm_flat_transmittance(setup.trigger_arm);
  g.signal_flat = arm_flat_transmittance(setup.signal_arm);
  if (const auto& slit = setup.trigger_arm.slit) {
    g.pdc_capture = captured_fraction(src.pdc, *slit);
    g.type1_capture = captured_pair_fraction(src.type1, src.pump.center(), *slit);
    g.fluor_capture = captured_fraction(src.fluorescence, *slit);
  } else {
    g.pdc_capture = 1.0;
    g.type1_capture = 2.0;
    g.fluor_capture = 1.0;
  }
  g.prompt_gate =
      gated_fraction_prompt(setup.gate, src.rep_rate_hz, setup.trigger_arm.detector.jitter_sigma_ns);
  g.coincidence_capture = coincidence_capture(setup.gate.coincidence_window_ns,
                                              setup.trigger_arm.detector.jitter_sigma_ns,
                                              setup.signal_arm.detector.jitter_sigma_ns);
  return g;
}

AnalyticRates analytic_rates(const Setup& setup, const RateGeometry& g) {
  const SourceConfig& src = setup.source;
  const double f = src.rep_rate_hz;
  const double m2 = src.mean_pairs_per_pulse();
  const double m1 = src.mean_type1_per_pulse();
  const double mf = src.mean_fluor_per_pulse();
  const bool type1_v = src.type1_polarization == Polarization::V;
  const double period = src.period_ns();

  const double pdc_t = f * m2 * g.pdc_capture * g.trigger_flat;
  const double type1_t = type1_v ? f * m1 * g.type1_capture * g.trigger_flat : 0.0;
  const double fluor_t = f * mf * src.fluor_trigger_fraction * g.fluor_capture * g.trigger_flat;
  const double dark_t = setup.trigger_arm.detector.dark_rate_hz;
  const double fluor_gate =
      mf > 0.0 ? gated_fraction_exponential(setup.gate, f, src.fluor_lifetime_ns,
                                            setup.trigger_arm.detector.jitter_sigma_ns)
               : 0.0;
  const double dark_gate = std::min(1.0, setup.gate.gate_width_ns / period);

  AnalyticRates r;
  r.rep_rate_hz = f;
  r.trigger_ungated = pdc_t + type1_t + fluor_t + dark_t;
  r.trigger_gated = (pdc_t + type1_t) * g.prompt_gate + fluor_t * fluor_gate + dark_t * dark_gate;
  r.signal = f * g.signal_flat *
                 (m2 + (type1_v ? 0.0 : 2.0 * m1) + mf * (1.0 - src.fluor_trigger_fraction)) +
             setup.signal_arm.detector.dark_rate_hz;
  r.true_coincidences_ungated = pdc_t * g.signal_flat * g.coincidence_capture;
  r.true_coincidences_gated = r.true_coincidences_ungated * g.prompt_gate;
  return r;
}

AnalyticRates analytic_rates(const Setup& setup) {
  setup.validate();
  return analytic_rates(setup, rate_geometry(setup));
}

}  // namespace hsps::analysis
