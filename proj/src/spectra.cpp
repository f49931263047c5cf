#include "hsps/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "hsps/errors.hpp"

namespace hsps {
namespace {

constexpr double kFwhmToSigma = 0.42466090014400953;  // 1 / (2 sqrt(2 ln 2))

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double blurred_sigma(const SlitFilter& f) { return f.resolution_nm * kFwhmToSigma; }

}  // namespace

SpectralShape::SpectralShape(SpectralFamily family, double center_nm, double width_nm)
    : family_(family), center_(center_nm), width_(width_nm) {
  if (!(center_nm > 0.0) || !std::isfinite(center_nm))
    throw ValidationError(fmt::format("spectral center must be positive, got {}", center_nm));
  if (!(width_nm >= 0.0) || !std::isfinite(width_nm))
    throw ValidationError(fmt::format("spectral width must be non-negative, got {}", width_nm));
}

SpectralShape SpectralShape::gaussian(double center_nm, double width_nm) {
  return {SpectralFamily::gaussian, center_nm, width_nm};
}

SpectralShape SpectralShape::top_hat(double center_nm, double width_nm) {
  return {SpectralFamily::top_hat, center_nm, width_nm};
}

double SpectralShape::sigma() const {
  // 1/e full width w: exp(-(w/2)^2 / (2 s^2)) = 1/e  =>  s = w / (2 sqrt 2)
  if (family_ == SpectralFamily::gaussian) return width_ / (2.0 * std::numbers::sqrt2);
  return width_ / std::sqrt(12.0);
}

double SpectralShape::density(double wavelength_nm) const {
  if (width_ == 0.0) return 0.0;
  if (family_ == SpectralFamily::gaussian) {
    const double s = sigma();
    const double z = (wavelength_nm - center_) / s;
    return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
  }
  return std::abs(wavelength_nm - center_) <= 0.5 * width_ ? 1.0 / width_ : 0.0;
}

double SpectralShape::cdf(double wavelength_nm) const {
  if (width_ == 0.0) return wavelength_nm < center_ ? 0.0 : 1.0;
  if (family_ == SpectralFamily::gaussian) return normal_cdf((wavelength_nm - center_) / sigma());
  const double lo = center_ - 0.5 * width_;
  return std::clamp((wavelength_nm - lo) / width_, 0.0, 1.0);
}

double sample_wavelength(const SpectralShape& shape, Engine& rng) {
  if (shape.width() == 0.0) return shape.center();
  if (shape.family() == SpectralFamily::gaussian) {
    std::normal_distribution<double> n(shape.center(), shape.sigma());
    return n(rng);
  }
  std::uniform_real_distribution<double> u(shape.center() - 0.5 * shape.width(),
                                           shape.center() + 0.5 * shape.width());
  return u(rng);
}

double partner_wavelength(double pump_nm, double trigger_nm) {
  if (!(trigger_nm > pump_nm) || !(pump_nm > 0.0))
    throw ValidationError(
        fmt::format("no partner for trigger {} nm with pump {} nm", trigger_nm, pump_nm));
  return 1.0 / (1.0 / pump_nm - 1.0 / trigger_nm);
}

void SlitCalibration::validate() const {
  if (!(nm_per_um != 0.0) || !std::isfinite(nm_per_um) || !std::isfinite(offset_nm))
    throw ValidationError("slit calibration must be a finite, strictly monotonic map");
}

void SlitFilter::validate() const {
  if (!(window_nm >= 0.0) || !std::isfinite(window_nm))
    throw ValidationError(fmt::format("slit window must be >= 0, got {}", window_nm));
  if (!(resolution_nm > 0.0) || !std::isfinite(resolution_nm))
    throw ValidationError(fmt::format("slit resolution must be > 0, got {}", resolution_nm));
  if (!(center_nm > 0.0)) throw ValidationError("slit center must be positive");
}

double slit_transmission(const SlitFilter& f, double wavelength_nm) {
  const double s = blurred_sigma(f);
  const double lo = f.center_nm - 0.5 * f.window_nm;
  const double hi = f.center_nm + 0.5 * f.window_nm;
  // Difference of CDFs, computed on the side with less cancellation.
  double t;
  if (wavelength_nm >= f.center_nm)
    t = normal_cdf((hi - wavelength_nm) / s) - normal_cdf((lo - wavelength_nm) / s);
  else
    t = normal_cdf((wavelength_nm - lo) / s) - normal_cdf((wavelength_nm - hi) / s);
  return std::clamp(t, 0.0, 1.0);
}

double captured_fraction(const SpectralShape& shape, const SlitFilter& f) {
  if (shape.width() == 0.0) return slit_transmission(f, shape.center());
  if (shape.family() == SpectralFamily::gaussian) {
    // Gaussian density against a gaussian-blurred top-hat: the blur adds in
    // quadrature with the shape's own width.
    const double s = std::hypot(shape.sigma(), blurred_sigma(f));
    const double lo = f.center_nm - 0.5 * f.window_nm;
    const double hi = f.center_nm + 0.5 * f.window_nm;
    return std::clamp(normal_cdf((hi - shape.center()) / s) - normal_cdf((lo - shape.center()) / s),
                      0.0, 1.0);
  }
  // Top-hat shape: integral of a difference of normal CDFs, closed form via
  // G(x) = x Phi(x/s) + s phi(x/s).
  const double s = blurred_sigma(f);
  auto G = [s](double x) {
    const double z = x / s;
    return x * normal_cdf(z) + s * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  };
  const double a = shape.center() - 0.5 * shape.width();
  const double b = shape.center() + 0.5 * shape.width();
  const double lo = f.center_nm - 0.5 * f.window_nm;
  const double hi = f.center_nm + 0.5 * f.window_nm;
  // integral_a^b [Phi((l - lo)/s) - Phi((l - hi)/s)] dl
  const double v = (G(b - lo) - G(a - lo)) - (G(b - hi) - G(a - hi));
  return std::clamp(v / shape.width(), 0.0, 1.0);
}

double captured_pair_fraction(const SpectralShape& shape, double pump_nm, const SlitFilter& f) {
  const double first = captured_fraction(shape, f);
  if (shape.width() == 0.0) {
    if (shape.center() <= pump_nm) return first;
    return first + slit_transmission(f, partner_wavelength(pump_nm, shape.center()));
  }

  struct Ctx {
    const SpectralShape* shape;
    double pump;
    const SlitFilter* filter;
  } ctx{&shape, pump_nm, &f};
  gsl_function fn;
  fn.params = &ctx;
  fn.function = [](double l, void* p) -> double {
    const auto* c = static_cast<const Ctx*>(p);
    if (l <= c->pump * (1.0 + 1e-9)) return 0.0;
    return c->shape->density(l) * slit_transmission(*c->filter, partner_wavelength(c->pump, l));
  };

  const double half = shape.family() == SpectralFamily::gaussian ? 10.0 * shape.sigma()
                                                                 : 0.5 * shape.width();
  const double lo = std::max(shape.center() - half, pump_nm * (1.0 + 1e-9));
  const double hi = shape.center() + half;
  if (hi <= lo) return first;

  static const bool quiet = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)quiet;
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
  double result = 0.0;
  double abserr = 0.0;
  // The partner's slit passband maps to a narrow sub-interval; split at it.
  const double a = f.center_nm - 0.5 * f.window_nm - 8.0 * blurred_sigma(f);
  const double b = f.center_nm + 0.5 * f.window_nm + 8.0 * blurred_sigma(f);
  double pts[4] = {};
  double cuts[2];
  int ncuts = 0;
  for (double edge : {b, a}) {  // partner is decreasing in the trigger wavelength
    if (edge > pump_nm) {
      const double x = partner_wavelength(pump_nm, edge);
      if (x > lo && x < hi) cuts[ncuts++] = x;
    }
  }
  if (ncuts == 2 && cuts[0] > cuts[1]) std::swap(cuts[0], cuts[1]);
  pts[0] = lo;
  for (int i = 0; i < ncuts; ++i) pts[1 + i] = cuts[i];
  pts[1 + ncuts] = hi;
  const int npts = 2 + ncuts;
  gsl_integration_qagp(&fn, pts, static_cast<std::size_t>(npts), 1e-14, 1e-10, 2000, ws, &result,
                       &abserr);
  gsl_integration_workspace_free(ws);
  return std::clamp(first + result, 0.0, 2.0);
}

}  // namespace hsps
