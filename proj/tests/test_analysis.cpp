#include <cmath>
#include <random>

#include "doctest.h"
#include "hsps/analysis/calibrate.hpp"
#include "hsps/analysis/klyshko.hpp"
#include "hsps/analysis/metrics.hpp"
#include "hsps/analysis/optimize.hpp"
#include "hsps/analysis/pipeline.hpp"
#include "hsps/analysis/rate_model.hpp"
#include "hsps/analysis/scan.hpp"
#include "hsps/errors.hpp"
#include "support/oracles.hpp"
#include "support/setups.hpp"

using namespace hsps;
using namespace hsps::analysis;

namespace {

CountsSummary counts(std::uint64_t st, std::uint64_t ss, std::uint64_t c, double t = 300.0) {
  CountsSummary s;
  s.integration_time_s = t;
  s.s_trigger = st;
  s.s_signal = ss;
  s.coincidences = c;
  return s;
}

bool within_sigma(double measured, double expected, double sigma, double k = 3.0) {
  return std::abs(measured - expected) <= k * sigma;
}

// Full width between the 1/e points of a sampled trace, linear interpolation.
double one_over_e_width(const std::vector<double>& x, const std::vector<double>& y) {
  const auto peak = std::max_element(y.begin(), y.end()) - y.begin();
  const double level = y[peak] / std::exp(1.0);
  auto cross = [&](std::ptrdiff_t from, int step) {
    for (std::ptrdiff_t i = from; i + step >= 0 && i + step < static_cast<std::ptrdiff_t>(y.size());
         i += step) {
      const auto j = i + step;
      if (y[j] < level) return x[i] + (x[j] - x[i]) * (y[i] - level) / (y[i] - y[j]);
    }
    return std::nan("");
  };
  return cross(peak, 1) - cross(peak, -1);
}

}  // namespace

TEST_CASE("conditional efficiency") {
  CHECK(conditional_efficiency(counts(746000, 11500000, 381000)) == doctest::Approx(0.5107239).epsilon(1e-6));
  CHECK(conditional_efficiency(counts(100, 100, 0)) == 0.0);
  CHECK(conditional_efficiency(counts(100, 100, 100)) == 1.0);
  CHECK_THROWS_AS(conditional_efficiency(counts(0, 100, 0)), UndefinedRatioError);
}

TEST_CASE("preparation efficiency") {
  CHECK(preparation_efficiency(0.515, 0.60).value == doctest::Approx(0.858333).epsilon(1e-6));
  CHECK_FALSE(preparation_efficiency(0.515, 0.60).capped);
  CHECK(preparation_efficiency(0.37, 1.0).value == 0.37);
  CHECK(preparation_efficiency(0.6, 0.6).value == doctest::Approx(1.0));
  const auto over = preparation_efficiency(0.7, 0.6);
  CHECK(over.capped);
  CHECK(over.value == 1.0);
  CHECK_THROWS_AS(preparation_efficiency(0.5, 0.0), ValidationError);
}

TEST_CASE("brightness") {
  const auto c = counts(746000, 11500000, 381000);
  CHECK(brightness(c, 1.494e-3) == doctest::Approx(850066.9).epsilon(1e-6));
  CHECK(brightness(c, 1.494e-3) == doctest::Approx(8.5e5).epsilon(0.01));
  CHECK(brightness(counts(10, 10, 0), 1.0) == 0.0);
  CHECK(brightness(c, 2.988e-3) == doctest::Approx(brightness(c, 1.494e-3) / 2));
  CHECK_THROWS_AS(brightness(c, 0.0), ValidationError);
  CHECK_THROWS_AS(brightness(counts(1, 1, 1, 0.0), 1.0), ValidationError);
}

TEST_CASE("efficiency report") {
  auto c = counts(746000, 11500000, 381000);
  c.accidentals_analytic = accidentals_analytic(746000, 11500000, 87e6, 300.0);
  const auto r = efficiency_report(c, 1.494e-3, 0.6);
  CHECK(r.conditional_efficiency == doctest::Approx(0.5107239).epsilon(1e-6));
  CHECK(r.preparation_efficiency.value == doctest::Approx(0.5107239 / 0.6).epsilon(1e-6));
  CHECK(r.accidentals_fraction == doctest::Approx(328.6973 / 381000).epsilon(1e-5));
  CHECK(r.accidentals_fraction < 1e-3);
  const double p = 0.5107239;
  CHECK(efficiency_sigma(c) == doctest::Approx(std::sqrt(p * (1 - p) / 746000)).epsilon(1e-5));
}

TEST_CASE("gate fractions against direct sampling") {
  std::mt19937_64 rng(10);
  const double rep = 87e6;
  const double period = 1e9 / rep;
  const std::size_t n = 400000;
  for (double lifetime : {0.5, 3.0, 40.0, 1000.0}) {
    for (double sigma : {0.0, 0.35, 1.0}) {
      std::exponential_distribution<double> delay(1.0 / lifetime);
      std::normal_distribution<double> jit(0.0, sigma > 0 ? sigma : 1.0);
      std::uniform_int_distribution<int> pulse(0, 1000);
      GateConfig g;
      std::size_t pass = 0;
      std::size_t prompt_pass = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double j = sigma > 0 ? jit(rng) : 0.0;
        const double base = pulse(rng) * period;
        if (gate_pass(base + delay(rng) + j, rep, g)) ++pass;
        if (gate_pass(base + j, rep, g)) ++prompt_pass;
      }
      const double f = gated_fraction_exponential(g, rep, lifetime, sigma);
      const double fp = gated_fraction_prompt(g, rep, sigma);
      CAPTURE(lifetime);
      CAPTURE(sigma);
      CHECK(within_sigma(pass / double(n), f, std::sqrt(f * (1 - f) / n) + 1e-9, 4.0));
      CHECK(within_sigma(prompt_pass / double(n), fp, std::sqrt(fp * (1 - fp) / n) + 1e-9, 4.0));
    }
  }
}

TEST_CASE("coincidence capture") {
  CHECK(coincidence_capture(3.0, 0.0, 0.0) == 1.0);
  CHECK(coincidence_capture(1.0, 1.0, 0.0) == doctest::Approx(0.682689492));
  CHECK(coincidence_capture(std::sqrt(2.0), 1.0, 1.0) == doctest::Approx(0.682689492));
}

TEST_CASE("analytic rates agree with simulation") {
  auto s = testcfg::fig3_setup();
  s.source.integration_time_s = 2.0;
  const auto a = analytic_rates(s);
  RunOptions opt;
  opt.seed = 31;
  const auto run = simulate_counts(s, opt);
  const double T = s.source.integration_time_s;
  CHECK(within_sigma(run.gated.s_trigger, a.trigger_gated * T, std::sqrt(a.trigger_gated * T), 4.0));
  CHECK(within_sigma(run.ungated.s_trigger, a.trigger_ungated * T, std::sqrt(a.trigger_ungated * T), 4.0));
  // Dead time trims the signal singles at the percent level.
  CHECK(run.gated.s_signal == doctest::Approx(a.signal * T).epsilon(0.01));
  CHECK(within_sigma(run.gated.coincidences, a.coincidences(true) * T, std::sqrt(a.coincidences(true) * T), 4.0));
  CHECK(within_sigma(run.ungated.coincidences, a.coincidences(false) * T,
                     std::sqrt(a.coincidences(false) * T), 4.0));
  CHECK(run.gated.s_signal == run.ungated.s_signal);
}

TEST_CASE("fitted brightness-optimized configuration") {
  const auto s = testcfg::fig3_setup();
  const auto a = analytic_rates(s);
  CHECK(a.trigger_gated == doctest::Approx(7.46e5 / 300).epsilon(0.01));
  CHECK(a.signal == doctest::Approx(1.15e7 / 300).epsilon(0.01));
  CHECK(a.coincidences(true) == doctest::Approx(3.81e5 / 300).epsilon(0.01));
  CHECK(a.efficiency(true) == doctest::Approx(0.5107).epsilon(0.002));
  CHECK(a.efficiency(false) < a.efficiency(true));
  CHECK(a.coincidences(true) / s.source.coupled_pump_power_mw == doctest::Approx(8.5e5).epsilon(0.01));
}

TEST_CASE("efficiency never exceeds signal transmittance beyond accidentals") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    auto s = testcfg::fig3_setup();
    s.source.mu_pairs = 0.2 * u(rng);
    s.source.mu_type1 = u(rng);
    s.source.mu_fluor = u(rng);
    s.source.fluor_lifetime_ns = std::exp(10 * u(rng) - 3);
    s.signal_arm.optics_transmission = u(rng);
    const auto a = analytic_rates(s);
    for (bool gated : {false, true}) {
      const double acc = a.trigger(gated) > 0 ? (a.coincidences(gated) - a.true_coincidences_gated * gated -
                                                 a.true_coincidences_ungated * !gated) /
                                                    a.trigger(gated)
                                              : 0.0;
      CHECK(a.efficiency(gated) <= arm_flat_transmittance(s.signal_arm) + acc + 1e-12);
    }
  }
}

TEST_CASE("gating leaves prompt-only light alone") {
  auto s = testcfg::fig3_setup();
  s.source.mu_fluor = 0.0;
  const auto a = analytic_rates(s);
  CHECK(a.efficiency(true) == doctest::Approx(a.efficiency(false)).epsilon(1e-4));
  s = testcfg::fig3_setup();
  s.source.mu_type1 = 0.0;
  s.source.fluor_lifetime_ns = 20.0;
  const auto b = analytic_rates(s);
  CHECK(b.efficiency(true) > b.efficiency(false));
}

TEST_CASE("pure PDC scan heralds perfectly") {
  auto s = testcfg::lossless_pdc_setup(1e-3);
  s.source.integration_time_s = 0.05;
  ScanPlan plan;
  plan.calibration = SlitCalibration{-0.5, 1201.0};  // 20 nm window at 40 um
  for (double p = 700; p <= 900; p += 50) plan.positions_um.push_back(p);
  RunOptions opt;
  const auto result = spectral_scan(s, plan, GateSelection::both, opt);
  REQUIRE(result.rows.size() == 2 * plan.positions_um.size());
  int with_counts = 0;
  for (const auto& row : result.rows) {
    if (row.counts.s_trigger == 0) continue;
    ++with_counts;
    CHECK(conditional_efficiency(row.counts) == 1.0);
  }
  CHECK(with_counts >= 6);
}

TEST_CASE("scan rows share detections and seeds") {
  auto s = testcfg::fig3_setup();
  s.source.integration_time_s = 0.05;
  ScanPlan plan;
  plan.calibration = SlitCalibration{-0.05, 841.0};
  plan.positions_um = {600.0, 800.0, 1000.0};
  RunOptions opt;
  opt.seed = 3;
  const auto both = spectral_scan(s, plan, GateSelection::both, opt, 2);
  REQUIRE(both.rows.size() == 6);
  for (std::size_t i = 0; i < 6; i += 2) {
    const auto& ung = both.rows[i];
    const auto& gat = both.rows[i + 1];
    CHECK_FALSE(ung.gated);
    CHECK(gat.gated);
    CHECK(ung.slit_center_nm == gat.slit_center_nm);
    CHECK(ung.window_nm == doctest::Approx(2.0));
    CHECK(ung.counts.s_signal == gat.counts.s_signal);
    CHECK(gat.counts.s_trigger <= ung.counts.s_trigger);
  }
  CHECK(both.rows[2].slit_center_nm == doctest::Approx(801.0));
  // Signal arm has no slit, so with a shared seed every position sees the same signal clicks.
  CHECK(both.rows[0].counts.s_signal == both.rows[2].counts.s_signal);
  const auto gated_only = spectral_scan(s, plan, GateSelection::gated, opt, 1);
  REQUIRE(gated_only.rows.size() == 3);
  CHECK(gated_only.rows[1].counts == both.rows[3].counts);
}

TEST_CASE("scan traces: singles 130 nm wide, coincidences 50 nm") {
  auto s = testcfg::fig3_setup();
  s.source.mu_type1 = 0.0;
  s.source.fluor_trigger_fraction = 0.5;
  s.source.mu_fluor = 20.0;  // fluorescence dominates the trigger singles
  ScanPlan plan;
  plan.calibration = SlitCalibration{-0.05, 841.0};
  for (double p = -2000; p <= 3600; p += 20) plan.positions_um.push_back(p);
  const auto rows = analytic_scan(s, plan);
  std::vector<double> x, singles, coinc;
  for (const auto& r : rows) {
    x.push_back(r.slit_center_nm);
    singles.push_back(r.rates.trigger_ungated);
    coinc.push_back(r.rates.true_coincidences_ungated);
  }
  std::reverse(x.begin(), x.end());
  std::reverse(singles.begin(), singles.end());
  std::reverse(coinc.begin(), coinc.end());
  CHECK(one_over_e_width(x, singles) == doctest::Approx(130.0).epsilon(0.05));
  CHECK(one_over_e_width(x, coinc) == doctest::Approx(50.0).epsilon(0.05));
}

TEST_CASE("simulated coincidence trace is symmetric about degeneracy") {
  auto s = testcfg::lossless_pdc_setup(2e-3);
  s.source.integration_time_s = 0.2;
  ScanPlan plan;
  plan.calibration = SlitCalibration{-0.25, 1001.0};  // 10 nm window
  for (double d : {-30.0, -15.0, 15.0, 30.0}) plan.positions_um.push_back((801.0 + d - 1001.0) / -0.25);
  RunOptions opt;
  opt.seed = 8;
  const auto r = spectral_scan(s, plan, GateSelection::ungated, opt, 2);
  REQUIRE(r.rows.size() == 4);
  for (std::size_t i = 0; i < 2; ++i) {
    const double a = r.rows[i].counts.coincidences;
    const double b = r.rows[3 - i].counts.coincidences;
    CHECK(a > 1000);
    CHECK(std::abs(a - b) <= 3.0 * std::sqrt(a + b));
  }
}

TEST_CASE("scan plan validation") {
  ScanPlan plan;
  plan.positions_um = {};
  CHECK_THROWS_AS(plan.validate(), ValidationError);
  plan.positions_um = {1.0};
  plan.slit_width_um = -1.0;
  CHECK_THROWS_AS(plan.validate(), ValidationError);
}

TEST_CASE("calibration closes on reachable targets") {
  auto truth = testcfg::fig3_setup();
  truth.source.integration_time_s = 1.0;
  const auto a = analytic_rates(truth);
  CalibrationRequest req;
  req.base = truth;
  req.base.source.mu_fluor = 0.0;
  req.base.source.mu_type1 = 0.0;
  req.eta_ungated = a.efficiency(false);
  req.eta_gated = a.efficiency(true);
  req.verify_time_s = 4.0;
  req.seed = 4;
  const auto fit = calibrate(req);
  CHECK(fit.residual < req.tolerance);
  CHECK(std::abs(fit.analytic_ungated - req.eta_ungated) < req.tolerance);
  CHECK(std::abs(fit.analytic_gated - req.eta_gated) < req.tolerance);
  CHECK(fit.mu_pairs == truth.source.mu_pairs);
  CHECK(fit.mu_fluor >= req.bounds.mu_fluor.lo);
  CHECK(fit.mu_fluor <= req.bounds.mu_fluor.hi);
  CHECK(fit.fluor_lifetime_ns >= req.bounds.fluor_lifetime_ns.lo);
  CHECK(fit.fluor_lifetime_ns <= req.bounds.fluor_lifetime_ns.hi);
  REQUIRE(fit.verification);
  const auto& v = *fit.verification;
  CHECK(std::abs(conditional_efficiency(v.ungated) - req.eta_ungated) < req.tolerance);
  CHECK(std::abs(conditional_efficiency(v.gated) - req.eta_gated) < req.tolerance);

  const auto applied = apply_calibration(req.base, fit);
  const auto b = analytic_rates(applied);
  CHECK(b.efficiency(true) == doctest::Approx(fit.analytic_gated));
}

TEST_CASE("equal targets need no gateable background") {
  CalibrationRequest req;
  req.base = testcfg::fig3_setup();
  req.eta_ungated = 0.3;
  req.eta_gated = 0.3;
  req.verify = false;
  const auto fit = calibrate(req);
  CHECK(fit.residual < req.tolerance);
  auto s = apply_calibration(req.base, fit);
  const auto geo = rate_geometry(s);
  // Fluorescence share of the ungated trigger rate stays within what the
  // tolerance lets through.
  s.source.mu_type1 = 0.0;
  s.source.mu_pairs = 0.0;
  const double fluor = analytic_rates(s, geo).trigger_ungated;
  const double total = analytic_rates(apply_calibration(req.base, fit), geo).trigger_ungated;
  CHECK((fluor / total < 0.05 || fit.fluor_lifetime_ns < 1.0));
}

TEST_CASE("targets above the signal transmittance cannot be met") {
  CalibrationRequest req;
  req.base = testcfg::fig3_setup();
  req.eta_ungated = 0.9;
  req.eta_gated = 0.95;
  req.verify = false;
  CHECK_THROWS_AS(calibrate(req), CalibrationError);
  try {
    calibrate(req);
  } catch (const CalibrationError& e) {
    CHECK(e.best().residual > 0.3);
    CHECK(e.best_residual() == e.best().residual);
  }
}

TEST_CASE("calibration preconditions") {
  CalibrationRequest req;
  req.base = testcfg::fig3_setup();
  req.eta_ungated = 0.6;
  req.eta_gated = 0.5;
  CHECK_THROWS_AS(calibrate(req), ValidationError);
  req.eta_ungated = 0.0;
  CHECK_THROWS_AS(calibrate(req), ValidationError);
  req.eta_ungated = 0.2;
  req.base.source.mu_pairs = 0.0;
  CHECK_THROWS_AS(calibrate(req), ValidationError);
}

TEST_CASE("window optimization") {
  const auto s = testcfg::fig3_setup();
  RunOptions opt;
  opt.seed = 6;
  WindowSearch search;

  SUBCASE("no floor picks the widest window") {
    search.efficiency_floor = 0.0;
    auto fast = s;
    fast.source.integration_time_s = 0.1;
    const auto w = optimize_window(fast, search, opt);
    CHECK(w.window_nm == search.width_max_nm);
  }
  SUBCASE("floor 0.51 lands near 17 nm") {
    auto fast = s;
    fast.source.integration_time_s = 0.5;
    const auto w = optimize_window(fast, search, opt);
    CHECK(w.window_nm >= 17.0 / 2);
    CHECK(w.window_nm <= 17.0 * 2);
    CHECK(w.analytic_efficiency >= 0.51);
    CHECK(std::abs(w.report.conditional_efficiency - w.analytic_efficiency) <
          5 * efficiency_sigma(w.counts.gated));
  }
  SUBCASE("floor above the signal transmittance is infeasible") {
    search.efficiency_floor = 0.6;
    CHECK_THROWS_AS(optimize_window(s, search, opt), InfeasibleError);
    try {
      optimize_window(s, search, opt);
    } catch (const InfeasibleError& e) {
      CHECK(e.best_achievable() <= 0.54);
      CHECK(e.best_achievable() > 0.5);
    }
  }
}

TEST_CASE("coincidences saturate once the window covers the pair spectrum") {
  auto s = testcfg::fig3_setup();
  s.trigger_arm.slit = SlitFilter{801.0, 300.0, 2.0};
  const double a = analytic_rates(s).true_coincidences_gated;
  s.trigger_arm.slit = SlitFilter{801.0, 600.0, 2.0};
  const double b = analytic_rates(s).true_coincidences_gated;
  CHECK(b <= a * (1 + 1e-9));
  CHECK(b == doctest::Approx(a).epsilon(1e-6));
}

TEST_CASE("heralding efficiency does not depend on trigger loss") {
  Setup s;
  s.source.coupled_pump_power_mw = 1.0;
  s.source.mu_pairs = 1e-3;
  RunOptions opt;
  opt.seed = 12;
  const std::vector<double> ts{1.0, 0.5, 0.1};
  const auto rows = klyshko_check(s, ts, 1e5, opt, 3);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.analytic == doctest::Approx(0.54).epsilon(1e-6));
    CHECK(within_sigma(r.efficiency, 0.54, r.sigma));
  }

  auto lossless = s;
  lossless.signal_arm.fiber_coupling = 1.0;
  lossless.signal_arm.detector.quantum_efficiency = 1.0;
  lossless.signal_arm.detector.dead_time_ns = 0.0;
  for (const auto& r : klyshko_check(lossless, ts, 2e4, opt)) CHECK(r.efficiency == 1.0);

  auto dark = s;
  dark.signal_arm.optics_transmission = 0.0;
  for (const auto& r : klyshko_check(dark, ts, 2e4, opt)) CHECK(r.efficiency == 0.0);

  auto noisy = s;
  noisy.source.mu_fluor = 1e-4;
  CHECK_THROWS_AS(klyshko_check(noisy, ts, 1e4, opt), ValidationError);
  auto bright = s;
  bright.source.mu_pairs = 1e-2;
  CHECK_THROWS_AS(klyshko_check(bright, ts, 1e4, opt), ValidationError);
}
