#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hsps/spectra.hpp"

namespace hsps {

enum class Polarization : std::uint8_t { H, V };
enum class Origin : std::uint8_t { pdc2_signal, pdc2_trigger, pdc1, fluorescence };

/// Per-pulse photon-number law.
enum class PhotonStatistics { poisson };

std::string_view to_string(Polarization p);
std::string_view to_string(Origin o);

/// Physical parameters of the pulsed source. Mean numbers are per pulse per mW
/// of coupled pump power.
struct SourceConfig {
  double rep_rate_hz = 87.0e6;
  double integration_time_s = 1.0;
  double coupled_pump_power_mw = 1.494e-3;
  double mu_pairs = 0.0;
  double mu_type1 = 0.0;
  double mu_fluor = 0.0;  // summed over both polarizations
  double fluor_lifetime_ns = 100.0;
  double fluor_trigger_fraction = 0.5;  // fraction emitted V
  Polarization type1_polarization = Polarization::V;
  PhotonStatistics statistics = PhotonStatistics::poisson;

  SpectralShape pump = SpectralShape::gaussian(400.5, 2.402);
  SpectralShape pdc = SpectralShape::gaussian(801.0, 50.0);
  SpectralShape type1 = SpectralShape::gaussian(861.0, 50.0);
  SpectralShape fluorescence = SpectralShape::gaussian(801.0, 130.0);

  void validate() const;

  double period_ns() const { return 1.0e9 / rep_rate_hz; }
  std::uint64_t pulse_count() const;
  double pulse_time_ns(std::uint64_t pulse) const { return static_cast<double>(pulse) * period_ns(); }

  double mean_pairs_per_pulse() const { return mu_pairs * coupled_pump_power_mw; }
  double mean_type1_per_pulse() const { return mu_type1 * coupled_pump_power_mw; }
  double mean_fluor_per_pulse() const { return mu_fluor * coupled_pump_power_mw; }

  /// Expected number of EmissionRecords over the whole run.
  double expected_record_count() const;
};

struct EmissionRecord {
  double time_ns = 0.0;
  double wavelength_nm = 0.0;
  Polarization polarization = Polarization::H;
  Origin origin = Origin::fluorescence;
  std::optional<std::uint64_t> pair_id;
};

struct EmissionOptions {
  std::uint64_t block_pulses = std::uint64_t{1} << 20;
  unsigned threads = 1;
  /// In-memory limit for emit_run; emit_stream ignores it.
  double max_records = 5.0e7;
};

using EmissionSink = std::function<void(std::span<const EmissionRecord>)>;

/// Generates the run and delivers records to `sink` in nondecreasing time
/// order, in chunks. Only pulses with at least one event are visited: gaps
/// between occupied pulses are geometric and the occupied-pulse count is a
/// zero-truncated Poisson draw. Output is identical for any thread count.
void emit_stream(const SourceConfig& config, std::uint64_t seed, const EmissionOptions& options,
                 const EmissionSink& sink);

/// Materialized emit_stream. Throws BudgetError if the expected record count
/// exceeds options.max_records.
std::vector<EmissionRecord> emit_run(const SourceConfig& config, std::uint64_t seed,
                                     const EmissionOptions& options = {});

/// Closed-form emission rates (photons/s) by origin and polarization.
struct ExpectedRates {
  double pdc2_pairs = 0.0;  // each pair is one V trigger + one H signal
  double type1_pairs = 0.0;
  double type1_photons_h = 0.0;
  double type1_photons_v = 0.0;
  double fluor_photons_h = 0.0;
  double fluor_photons_v = 0.0;

  double photons_h() const { return pdc2_pairs + type1_photons_h + fluor_photons_h; }
  double photons_v() const { return pdc2_pairs + type1_photons_v + fluor_photons_v; }
};

ExpectedRates expected_rates(const SourceConfig& config);

}  // namespace hsps
