#include "hsps/analysis/calibrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <tuple>

#include <fmt/format.h>
#include <gsl/gsl_multimin.h>

#include "hsps/analysis/metrics.hpp"
#include "hsps/analysis/rate_model.hpp"

namespace hsps::analysis {
namespace {

struct Params {
  double mu_fluor;
  double lifetime_ns;
  double mu_type1;
};

// Unconstrained x maps onto [lo, hi] through (1 + sin x) / 2; the lifetime
// axis is searched in log space.
double to_bounded(double x, Interval b) { return b.lo + (b.hi - b.lo) * 0.5 * (1.0 + std::sin(x)); }

double from_bounded(double v, Interval b) {
  if (b.hi <= b.lo) return 0.0;
  return std::asin(std::clamp(2.0 * (v - b.lo) / (b.hi - b.lo) - 1.0, -1.0, 1.0));
}

Interval log_interval(Interval b) { return {std::log(b.lo), std::log(b.hi)}; }

class Problem {
 public:
  explicit Problem(const CalibrationRequest& r)
      : setup_(r.base), geometry_(rate_geometry(r.base)), bounds_(r.bounds),
        target_u_(r.eta_ungated), target_g_(r.eta_gated) {}

  Params decode(const double* x) const {
    return {to_bounded(x[0], bounds_.mu_fluor),
            std::exp(to_bounded(x[1], log_interval(bounds_.fluor_lifetime_ns))),
            to_bounded(x[2], bounds_.mu_type1)};
  }

  std::array<double, 3> encode(const Params& p) const {
    return {from_bounded(p.mu_fluor, bounds_.mu_fluor),
            from_bounded(std::log(p.lifetime_ns), log_interval(bounds_.fluor_lifetime_ns)),
            from_bounded(p.mu_type1, bounds_.mu_type1)};
  }

  std::pair<double, double> efficiencies(const Params& p) const {
    Setup s = setup_;
    s.source.mu_fluor = p.mu_fluor;
    s.source.fluor_lifetime_ns = p.lifetime_ns;
    s.source.mu_type1 = p.mu_type1;
    const AnalyticRates r = analytic_rates(s, geometry_);
    return {r.efficiency(false), r.efficiency(true)};
  }

  double objective(const Params& p) const {
    if (minimax_) return residual(p);
    const auto [u, g] = efficiencies(p);
    return (u - target_u_) * (u - target_u_) + (g - target_g_) * (g - target_g_);
  }

  // Least squares is smooth and finds exact fits; when the targets are out of
  // reach, the largest error is what decides, so minimize that instead.
  void use_minimax() { minimax_ = true; }

  double residual(const Params& p) const {
    const auto [u, g] = efficiencies(p);
    return std::max(std::abs(u - target_u_), std::abs(g - target_g_));
  }

 private:
  Setup setup_;
  RateGeometry geometry_;
  CalibrationBounds bounds_;
  double target_u_;
  double target_g_;
  bool minimax_ = false;
};

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i)
    v.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1)));
  return v;
}

std::vector<double> mu_grid(Interval b, int n) {
  std::vector<double> v{b.lo};
  const double top = b.hi;
  const double bottom = std::max(b.lo, top * 1e-6);
  if (top > bottom) {
    for (double m : log_grid(bottom, top, n)) v.push_back(m);
  }
  return v;
}

// Coarse grid; the best few points seed the simplex runs.
std::vector<Params> starting_points(const Problem& problem, const CalibrationBounds& b, int keep) {
  std::vector<std::pair<double, Params>> scored;
  for (double mf : mu_grid(b.mu_fluor, 8))
    for (double tau : log_grid(b.fluor_lifetime_ns.lo, b.fluor_lifetime_ns.hi, 8))
      for (double m1 : mu_grid(b.mu_type1, 5)) {
        const Params p{mf, tau, m1};
        scored.emplace_back(problem.objective(p), p);
      }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& c) { return a.first < c.first; });
  std::vector<Params> starts;
  for (int i = 0; i < keep && i < static_cast<int>(scored.size()); ++i)
    starts.push_back(scored[static_cast<std::size_t>(i)].second);
  return starts;
}

double gsl_objective(const gsl_vector* x, void* params) {
  const auto* problem = static_cast<const Problem*>(params);
  const double v[3] = {gsl_vector_get(x, 0), gsl_vector_get(x, 1), gsl_vector_get(x, 2)};
  return problem->objective(problem->decode(v));
}

struct Descent {
  std::array<double, 3> x;
  double value;
  int iterations;
};

Descent run_simplex(const Problem& problem, const std::array<double, 3>& start, int max_iterations) {
  gsl_multimin_function fn{&gsl_objective, 3, const_cast<Problem*>(&problem)};
  gsl_vector* x = gsl_vector_alloc(3);
  gsl_vector* step = gsl_vector_alloc(3);
  for (std::size_t i = 0; i < 3; ++i) {
    gsl_vector_set(x, i, start[i]);
    gsl_vector_set(step, i, 0.4);
  }
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
  gsl_multimin_fminimizer_set(m, &fn, x, step);
  int it = 0;
  for (; it < max_iterations; ++it) {
    if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-10) == GSL_SUCCESS) break;
    if (gsl_multimin_fminimizer_minimum(m) < 1e-20) break;
  }
  Descent d{{gsl_vector_get(m->x, 0), gsl_vector_get(m->x, 1), gsl_vector_get(m->x, 2)},
            gsl_multimin_fminimizer_minimum(m), it};
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return d;
}

}  // namespace

Setup apply_calibration(Setup base, const CalibrationTarget& fit) {
  base.source.mu_fluor = fit.mu_fluor;
  base.source.fluor_lifetime_ns = fit.fluor_lifetime_ns;
  base.source.mu_type1 = fit.mu_type1;
  base.source.mu_pairs = fit.mu_pairs;
  return base;
}

CalibrationTarget calibrate(const CalibrationRequest& request) {
  request.base.validate();
  const double tu = request.eta_ungated;
  const double tg = request.eta_gated;
  if (!(tu > 0.0 && tu < 1.0 && tg > 0.0 && tg < 1.0))
    throw ValidationError(fmt::format("calibration targets ({}, {}) must lie in (0, 1)", tu, tg));
  if (tg < tu)
    throw ValidationError("gated target must not be below the ungated target");
  if (!(request.base.source.mean_pairs_per_pulse() > 0.0))
    throw ValidationError("calibration needs a positive type-II pair rate");
  const auto& b = request.bounds;
  if (!(b.mu_fluor.lo >= 0.0 && b.mu_fluor.hi >= b.mu_fluor.lo && b.mu_type1.lo >= 0.0 &&
        b.mu_type1.hi >= b.mu_type1.lo && b.fluor_lifetime_ns.lo > 0.0 &&
        b.fluor_lifetime_ns.hi >= b.fluor_lifetime_ns.lo))
    throw ValidationError("calibration bounds are not valid intervals");

  Problem problem(request);
  int iterations = 0;

  // Restart from the incumbent whenever the simplex collapses, until a
  // restart stops improving.
  auto descend = [&](const Problem& pr, const std::vector<Params>& starts, Params& best,
                     double stop_below) {
    double best_value = pr.objective(best);
    for (const Params& start : starts) {
      std::array<double, 3> x = pr.encode(start);
      double previous = INFINITY;
      for (int restart = 0; restart <= request.max_restarts; ++restart) {
        const Descent d = run_simplex(pr, x, request.max_iterations);
        iterations += d.iterations;
        if (d.value < best_value) {
          best_value = d.value;
          best = pr.decode(d.x.data());
        }
        if (!(d.value < previous * (1.0 - 1e-9))) break;
        previous = d.value;
        x = d.x;
      }
      if (problem.residual(best) < stop_below) break;
    }
  };

  const auto starts = starting_points(problem, b, 4);
  Params best_params = starts.front();
  descend(problem, starts, best_params, 1e-6);
  if (!(problem.residual(best_params) <= request.tolerance)) {
    Problem minimax = problem;
    minimax.use_minimax();
    std::vector<Params> from{best_params};
    from.insert(from.end(), starts.begin(), starts.end());
    descend(minimax, from, best_params, request.tolerance);
  }

  CalibrationTarget fit;
  fit.eta_ungated = tu;
  fit.eta_gated = tg;
  fit.mu_fluor = best_params.mu_fluor;
  fit.fluor_lifetime_ns = best_params.lifetime_ns;
  fit.mu_type1 = best_params.mu_type1;
  fit.mu_pairs = request.base.source.mu_pairs;
  std::tie(fit.analytic_ungated, fit.analytic_gated) = problem.efficiencies(best_params);
  fit.residual = problem.residual(best_params);
  fit.iterations = iterations;

  if (!(fit.residual <= request.tolerance))
    throw CalibrationError(
        fmt::format("calibration did not reach tolerance {}: best residual {:.4f} "
                    "(ungated {:.4f} vs {:.4f}, gated {:.4f} vs {:.4f})",
                    request.tolerance, fit.residual, fit.analytic_ungated, tu,
                    fit.analytic_gated, tg),
        fit);

  if (request.verify) {
    Setup check = apply_calibration(request.base, fit);
    check.source.integration_time_s = request.verify_time_s;
    RunOptions run;
    run.seed = request.seed;
    run.emission.threads = request.threads;
    fit.verification = simulate_counts(check, run);
    const auto& v = *fit.verification;
    if (v.gated.s_trigger == 0 || v.ungated.s_trigger == 0)
      throw CalibrationError("simulation check produced no trigger counts", fit);
    const double mu = conditional_efficiency(v.ungated);
    const double mg = conditional_efficiency(v.gated);
    if (std::abs(mu - tu) > request.tolerance || std::abs(mg - tg) > request.tolerance)
      throw CalibrationError(
          fmt::format("simulated efficiencies (ungated {:.4f}, gated {:.4f}) miss the targets by "
                      "more than {}",
                      mu, mg, request.tolerance),
          fit);
  }
  return fit;
}

}  // namespace hsps::analysis
