#include "hsps/cli/output.hpp"

#include <cmath>
#include <cstdio>
#include <system_error>

#include <fmt/format.h>

#include "hsps/analysis/metrics.hpp"
#include "hsps/errors.hpp"

namespace hsps::cli {

namespace fs = std::filesystem;

AtomicFile::AtomicFile(fs::path path) : path_(std::move(path)) {
  temp_ = path_;
  temp_ += ".tmp";
  file_ = std::fopen(temp_.c_str(), "wb");
  if (!file_) throw IoError(fmt::format("cannot write '{}'", temp_.string()));
}

AtomicFile::~AtomicFile() {
  if (file_) {
    std::fclose(file_);
    std::error_code ec;
    fs::remove(temp_, ec);
  }
}

void AtomicFile::write(std::string_view text) {
  if (!file_) throw IoError(fmt::format("'{}' already committed", path_.string()));
  if (std::fwrite(text.data(), 1, text.size(), file_) != text.size())
    throw IoError(fmt::format("short write to '{}'", temp_.string()));
}

void AtomicFile::commit() {
  if (!file_) return;
  const bool ok = std::fclose(file_) == 0;
  file_ = nullptr;
  std::error_code ec;
  if (ok) fs::rename(temp_, path_, ec);
  if (!ok || ec) {
    fs::remove(temp_, ec);
    throw IoError(fmt::format("cannot write '{}'", path_.string()));
  }
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  AtomicFile f(path);
  f.write(content);
  f.commit();
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  return fmt::format("{}", v);
}

namespace {

double efficiency_or_nan(const CountsSummary& c) {
  return c.s_trigger > 0 ? analysis::conditional_efficiency(c) : NAN;
}

double brightness_or_nan(const CountsSummary& c, double power_mw) {
  return c.integration_time_s > 0.0 && power_mw > 0.0 ? analysis::brightness(c, power_mw) : NAN;
}

std::string counts_fields(const CountsSummary& c, double power_mw) {
  return fmt::format("{},{},{},{},{},{}", c.s_trigger, c.s_signal, c.coincidences,
                     format_number(c.accidentals_analytic), format_number(efficiency_or_nan(c)),
                     format_number(brightness_or_nan(c, power_mw)));
}

}  // namespace

std::string counts_csv(const std::vector<std::pair<bool, CountsSummary>>& rows, double power_mw) {
  std::string out =
      "# hsps counts v1\n"
      "gated,integration_time_s,s_trigger,s_signal,coincidences,accidentals,efficiency,brightness\n";
  for (const auto& [gated, c] : rows)
    out += fmt::format("{},{},{}\n", gated ? 1 : 0, format_number(c.integration_time_s),
                       counts_fields(c, power_mw));
  return out;
}

std::string scan_csv(const analysis::ScanResult& scan, double power_mw) {
  std::string out =
      "# hsps scan v1\n"
      "slit_center_nm,window_nm,gated,s_trigger,s_signal,coincidences,accidentals,efficiency,"
      "brightness\n";
  for (const auto& r : scan.rows)
    out += fmt::format("{},{},{},{}\n", format_number(r.slit_center_nm), format_number(r.window_nm),
                       r.gated ? 1 : 0, counts_fields(r.counts, power_mw));
  return out;
}

std::string klyshko_csv(const std::vector<analysis::KlyshkoRow>& rows) {
  std::string out =
      "# hsps klyshko v1\n"
      "trigger_transmittance,integration_time_s,s_trigger,s_signal,coincidences,efficiency,sigma,"
      "analytic\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{},{}\n", format_number(r.trigger_transmittance),
                       format_number(r.counts.integration_time_s), r.counts.s_trigger,
                       r.counts.s_signal, r.counts.coincidences, format_number(r.efficiency),
                       format_number(r.sigma), format_number(r.analytic));
  return out;
}

std::string calibration_csv(const analysis::CalibrationTarget& fit, bool converged) {
  double mc_ungated = NAN;
  double mc_gated = NAN;
  if (fit.verification) {
    mc_ungated = efficiency_or_nan(fit.verification->ungated);
    mc_gated = efficiency_or_nan(fit.verification->gated);
  }
  return fmt::format(
      "# hsps calibration v1\n"
      "converged,eta_ungated,eta_gated,mu_pairs,mu_fluor,fluor_lifetime_ns,mu_type1,residual,"
      "analytic_ungated,analytic_gated,mc_ungated,mc_gated,iterations\n"
      "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
      converged ? 1 : 0, format_number(fit.eta_ungated), format_number(fit.eta_gated),
      format_number(fit.mu_pairs), format_number(fit.mu_fluor), format_number(fit.fluor_lifetime_ns),
      format_number(fit.mu_type1), format_number(fit.residual), format_number(fit.analytic_ungated),
      format_number(fit.analytic_gated), format_number(mc_ungated), format_number(mc_gated),
      fit.iterations);
}

std::string window_csv(const analysis::WindowOptimum& w) {
  return fmt::format(
      "# hsps window v1\n"
      "center_nm,window_nm,analytic_efficiency,analytic_brightness,s_trigger,s_signal,coincidences,"
      "efficiency,brightness\n"
      "{},{},{},{},{},{},{},{},{}\n",
      format_number(w.center_nm), format_number(w.window_nm), format_number(w.analytic_efficiency),
      format_number(w.analytic_brightness), w.counts.gated.s_trigger, w.counts.gated.s_signal,
      w.counts.gated.coincidences, format_number(w.report.conditional_efficiency),
      format_number(w.report.brightness));
}

std::string emission_csv_header() {
  return "# hsps emission v1\ntime_ns,wavelength_nm,polarization,origin,pair_id\n";
}

std::string emission_csv_row(const EmissionRecord& r) {
  return fmt::format("{},{},{},{},{}\n", format_number(r.time_ns), format_number(r.wavelength_nm),
                     to_string(r.polarization), to_string(r.origin),
                     r.pair_id ? fmt::format("{}", *r.pair_id) : std::string{});
}

std::string detection_csv_header(double integration_time_s) {
  return fmt::format(
      "# hsps detection v1\n# units=ns\n# integration_time_s={}\nchannel,time_ns,source\n",
      format_number(integration_time_s));
}

std::string detection_csv_row(const DetectionEvent& e) {
  return fmt::format("{},{},{}\n", to_string(e.channel), format_number(e.time_ns), to_string(e.source));
}

std::string counts_report(std::string_view title, const CountsSummary& c, double power_mw,
                          double signal_qe, std::optional<double> rescale_s) {
  std::string out = fmt::format("[{}]\n", title);
  out += fmt::format("  integration time      {} s\n", format_number(c.integration_time_s));
  out += fmt::format("  trigger singles       {}\n", c.s_trigger);
  out += fmt::format("  signal singles        {}\n", c.s_signal);
  out += fmt::format("  coincidences          {}\n", c.coincidences);
  out += fmt::format("  accidentals (calc.)   {:.4g}\n", c.accidentals_analytic);
  if (c.s_trigger > 0) {
    const auto r = analysis::efficiency_report(c, power_mw, signal_qe);
    out += fmt::format("  conditional eff.      {:.4f} +/- {:.4f}\n", r.conditional_efficiency,
                       analysis::efficiency_sigma(c));
    out += fmt::format("  preparation eff.      {:.4f}{}\n", r.preparation_efficiency.value,
                       r.preparation_efficiency.capped ? " (capped at 1)" : "");
    out += fmt::format("  accidentals fraction  {:.3g}\n", r.accidentals_fraction);
  } else {
    out += "  conditional eff.      undefined (no trigger counts)\n";
  }
  const double b = brightness_or_nan(c, power_mw);
  if (!std::isnan(b)) out += fmt::format("  brightness            {:.4g} /(s mW)\n", b);
  if (rescale_s && c.integration_time_s > 0.0) {
    const double k = *rescale_s / c.integration_time_s;
    out += fmt::format("  rescaled to {} s:      trigger {:.4g}, signal {:.4g}, coincidences {:.4g}, "
                       "accidentals {:.4g}\n",
                       format_number(*rescale_s), k * c.s_trigger, k * c.s_signal, k * c.coincidences,
                       k * c.accidentals_analytic);
  }
  return out;
}

}  // namespace hsps::cli
