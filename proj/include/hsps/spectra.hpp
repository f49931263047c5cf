#pragma once

#include "hsps/random.hpp"

namespace hsps {

enum class SpectralFamily { gaussian, top_hat };

/// Marginal spectral density of one light class.
///
/// Width convention depends on the family: the 1/e full width for a gaussian
/// (density at center +/- width/2 is 1/e of the peak), the full width for a
/// top-hat. A zero width is a delta at the center.
class SpectralShape {
 public:
  static SpectralShape gaussian(double center_nm, double width_nm);
  static SpectralShape top_hat(double center_nm, double width_nm);

  SpectralFamily family() const { return family_; }
  double center() const { return center_; }
  double width() const { return width_; }

  /// Standard deviation of the density.
  double sigma() const;

  /// Normalized density (1/nm). Zero-width shapes return 0 everywhere.
  double density(double wavelength_nm) const;

  /// P(wavelength < x).
  double cdf(double wavelength_nm) const;

 private:
  SpectralShape(SpectralFamily family, double center_nm, double width_nm);

  SpectralFamily family_;
  double center_;
  double width_;
};

double sample_wavelength(const SpectralShape& shape, Engine& rng);

/// Signal wavelength closing energy conservation: 1/ls = 1/lp - 1/lt.
/// Throws ValidationError when trigger <= pump.
double partner_wavelength(double pump_nm, double trigger_nm);

/// Affine map from slit position (um) to wavelength (nm).
struct SlitCalibration {
  double nm_per_um = 1.0;
  double offset_nm = 0.0;

  void validate() const;
  double to_wavelength(double position_um) const { return nm_per_um * position_um + offset_nm; }
  double to_position(double wavelength_nm) const { return (wavelength_nm - offset_nm) / nm_per_um; }
};

inline double position_to_wavelength(const SlitCalibration& cal, double position_um) {
  return cal.to_wavelength(position_um);
}

/// Prism-spectrometer slit: a top-hat of full width `window_nm` blurred by a
/// gaussian instrument response of FWHM `resolution_nm`.
struct SlitFilter {
  double center_nm = 801.0;
  double window_nm = 17.0;
  double resolution_nm = 2.0;

  void validate() const;
};

double slit_transmission(const SlitFilter& filter, double wavelength_nm);

/// Expected fraction of photons drawn from `shape` that pass the slit.
double captured_fraction(const SpectralShape& shape, const SlitFilter& filter);

/// Expected number of slit-passing photons per pair whose first member is
/// drawn from `shape` and whose partner closes energy conservation against
/// `pump_nm`. Ranges over [0, 2].
double captured_pair_fraction(const SpectralShape& shape, double pump_nm,
                              const SlitFilter& filter);

}  // namespace hsps
