#include "hsps/cli/commands.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "hsps/analysis/metrics.hpp"
#include "hsps/analysis/pipeline.hpp"
#include "hsps/cli/output.hpp"
#include "hsps/cli/scenario.hpp"
#include "hsps/cli/timetags.hpp"
#include "hsps/errors.hpp"

namespace hsps::cli {

namespace fs = std::filesystem;

namespace {

Mode mode_for_verb(const std::string& verb, const std::optional<Scenario>& sc) {
  if (verb == "run") {
    if (!sc) throw ValidationError("'run' needs --scenario");
    return sc->mode;
  }
  if (verb == "simulate") return Mode::counts;
  if (verb == "scan") return Mode::scan;
  if (verb == "calibrate") return Mode::calibrate;
  if (verb == "optimize-window") return Mode::optimize;
  if (verb == "klyshko") return Mode::klyshko;
  if (verb == "analyze") return Mode::analyze;
  throw ValidationError(fmt::format("unknown verb '{}'", verb));
}

struct Context {
  const CommandOptions& opt;
  Scenario sc;
  Mode mode;
  std::uint64_t seed = 0;
  std::ostream& log;
  std::ostream& err;

  fs::path out(const char* name) const { return opt.out / name; }
  double power() const { return sc.setup.source.coupled_pump_power_mw; }
  double signal_qe() const { return sc.setup.signal_arm.detector.quantum_efficiency; }

  std::string report_header() const {
    std::string h = fmt::format("scenario  {}\nmode      {}\n", sc.name.empty() ? "-" : sc.name, to_string(mode));
    if (mode != Mode::analyze) h += fmt::format("seed      {}\n", seed);
    return h + "\n";
  }

  void write(const char* name, std::string_view content) const {
    write_file_atomic(out(name), content);
    fmt::print(log, "wrote {}\n", out(name).string());
  }

  analysis::RunOptions run_options() const {
    analysis::RunOptions r;
    r.seed = seed;
    r.emission.threads = opt.threads;
    return r;
  }
};

void do_counts(Context& c) {
  auto run = c.run_options();
  std::optional<AtomicFile> emission;
  std::optional<AtomicFile> detection;
  if (c.sc.dump_emission) {
    emission.emplace(c.out("emission.csv"));
    emission->write(emission_csv_header());
    run.on_emission = [&](std::span<const EmissionRecord> chunk) {
      std::string buf;
      for (const auto& r : chunk) buf += emission_csv_row(r);
      emission->write(buf);
    };
  }
  if (c.sc.dump_detection) {
    detection.emplace(c.out("detection.csv"));
    detection->write(detection_csv_header(c.sc.setup.source.integration_time_s));
    run.on_detection = [&](const DetectionEvent& e) { detection->write(detection_csv_row(e)); };
  }
  const auto counts = analysis::simulate_counts(c.sc.setup, run);
  if (emission) emission->commit();
  if (detection) detection->commit();

  c.write("counts.csv", counts_csv({{false, counts.ungated}, {true, counts.gated}}, c.power()));
  c.write("report.txt", c.report_header() +
                            counts_report("ungated", counts.ungated, c.power(), c.signal_qe(), c.sc.report_time_s) +
                            "\n" +
                            counts_report("gated", counts.gated, c.power(), c.signal_qe(), c.sc.report_time_s));
}

void do_scan(Context& c) {
  auto run = c.run_options();
  run.emission.threads = 1;  // positions run in parallel instead
  const auto result =
      analysis::spectral_scan(c.sc.setup, c.sc.scan, analysis::GateSelection::both, run, c.opt.threads);
  c.write("scan.csv", scan_csv(result, c.power()));

  std::string rep = c.report_header();
  rep += fmt::format("positions {}  window {} nm\n\n", c.sc.scan.positions_um.size(),
                     format_number(c.sc.scan.window_nm()));
  for (bool gated : {false, true}) {
    const analysis::ScanRow* peak = nullptr;
    for (const auto& row : result.rows)
      if (row.gated == gated && (!peak || row.counts.coincidences > peak->counts.coincidences)) peak = &row;
    if (!peak) continue;
    rep += counts_report(fmt::format("{} peak at {:.2f} nm", gated ? "gated" : "ungated", peak->slit_center_nm),
                         peak->counts, c.power(), c.signal_qe(), c.sc.report_time_s);
    rep += "\n";
  }
  c.write("report.txt", rep);
}

void do_calibrate(Context& c) {
  auto req = c.sc.calibration;
  req.base = c.sc.setup;
  req.seed = c.seed;
  req.threads = c.opt.threads;
  analysis::CalibrationTarget fit;
  bool converged = true;
  std::optional<analysis::CalibrationError> failure;
  try {
    fit = analysis::calibrate(req);
  } catch (const analysis::CalibrationError& e) {
    fit = e.best();
    converged = false;
    failure.emplace(e);
  }
  c.write("calibration.csv", calibration_csv(fit, converged));
  std::string rep = c.report_header();
  rep += fmt::format("targets           ungated {:.4f}  gated {:.4f}  tolerance {}\n", req.eta_ungated,
                     req.eta_gated, format_number(req.tolerance));
  rep += fmt::format("status            {}\n", converged ? "converged" : "no parameter set meets the tolerance");
  rep += fmt::format("mu_pairs          {}\nmu_fluor          {}\nfluor_lifetime_ns {}\nmu_type1          {}\n",
                     format_number(fit.mu_pairs), format_number(fit.mu_fluor),
                     format_number(fit.fluor_lifetime_ns), format_number(fit.mu_type1));
  rep += fmt::format("analytic          ungated {:.4f}  gated {:.4f}  residual {:.4f}\n", fit.analytic_ungated,
                     fit.analytic_gated, fit.residual);
  if (fit.verification) {
    rep += "\n" + counts_report("verification, ungated", fit.verification->ungated, c.power(), c.signal_qe(), std::nullopt);
    rep += "\n" + counts_report("verification, gated", fit.verification->gated, c.power(), c.signal_qe(), std::nullopt);
  }
  c.write("report.txt", rep);
  if (failure) throw *failure;
}

void do_optimize(Context& c) {
  const auto w = analysis::optimize_window(c.sc.setup, c.sc.window, c.run_options());
  c.write("window.csv", window_csv(w));
  c.write("counts.csv", counts_csv({{false, w.counts.ungated}, {true, w.counts.gated}}, c.power()));
  std::string rep = c.report_header();
  rep += fmt::format("efficiency floor  {}\nwindow            {} nm centered at {} nm\n",
                     format_number(c.sc.window.efficiency_floor), format_number(w.window_nm),
                     format_number(w.center_nm));
  rep += fmt::format("analytic          efficiency {:.4f}  brightness {:.4g} /(s mW)\n\n", w.analytic_efficiency,
                     w.analytic_brightness);
  rep += counts_report("gated", w.counts.gated, c.power(), c.signal_qe(), c.sc.report_time_s);
  c.write("report.txt", rep);
}

void do_klyshko(Context& c) {
  auto run = c.run_options();
  run.emission.threads = 1;
  const auto rows = analysis::klyshko_check(c.sc.setup, c.sc.klyshko.trigger_transmittances,
                                            c.sc.klyshko.pairs_per_point, run, c.opt.threads);
  c.write("klyshko.csv", klyshko_csv(rows));
  std::string rep = c.report_header();
  rep += "trigger_T  efficiency  sigma    analytic\n";
  for (const auto& r : rows)
    rep += fmt::format("{:<9.4g}  {:<10.4f}  {:<7.4f}  {:.4f}\n", r.trigger_transmittance, r.efficiency, r.sigma,
                       r.analytic);
  c.write("report.txt", rep);
}

void do_analyze(Context& c) {
  fs::path input;
  if (c.opt.input) {
    input = *c.opt.input;
  } else if (!c.sc.analyze.input.empty()) {
    input = c.sc.analyze.input;
  } else {
    throw ValidationError("analyze needs --input or analyze.input in the scenario");
  }
  const TimeTags tags = read_time_tags(input);
  for (const auto& w : tags.warnings) fmt::print(c.err, "warning: {}: {}\n", input.string(), w);

  double T = 0.0;
  if (c.opt.integration_time_s) {
    T = *c.opt.integration_time_s;
  } else if (tags.integration_time_s) {
    T = *tags.integration_time_s;
  } else if (c.sc.analyze.integration_time_s) {
    T = *c.sc.analyze.integration_time_s;
  } else {
    double last = 0.0;
    if (!tags.trigger_ns.empty()) last = std::max(last, tags.trigger_ns.back());
    if (!tags.signal_ns.empty()) last = std::max(last, tags.signal_ns.back());
    T = last * 1e-9;
    if (T > 0.0)
      fmt::print(c.err, "warning: no integration time given; using the last timestamp ({} s)\n", format_number(T));
  }
  if (!(T >= 0.0)) throw ValidationError("integration time must be >= 0");

  const double f = c.sc.setup.source.rep_rate_hz;
  GateConfig gated = c.sc.setup.gate;
  gated.gating_enabled = true;
  GateConfig ungated = c.sc.setup.gate;
  ungated.gating_enabled = false;
  const auto g = count_run(tags.trigger_ns, tags.signal_ns, gated, f, T);
  const auto u = count_run(tags.trigger_ns, tags.signal_ns, ungated, f, T);
  c.write("counts.csv", counts_csv({{false, u}, {true, g}}, c.power()));
  c.write("report.txt", c.report_header() + fmt::format("input     {}\n\n", input.filename().string()) +
                            counts_report("ungated", u, c.power(), c.signal_qe(), c.sc.report_time_s) + "\n" +
                            counts_report("gated", g, c.power(), c.signal_qe(), c.sc.report_time_s));
}

int execute(const CommandOptions& opt, std::ostream& log, std::ostream& err) {
  std::optional<Scenario> sc;
  if (opt.scenario) sc = load_scenario(*opt.scenario);
  const Mode mode = mode_for_verb(opt.verb, sc);
  if (!sc) {
    if (mode != Mode::analyze) throw ValidationError(fmt::format("'{}' needs --scenario", opt.verb));
    sc.emplace();
  }
  if (opt.threads == 0) throw ValidationError("--threads must be >= 1");
  sc->mode = mode;
  sc->validate();

  Context c{opt, *sc, mode, 0, log, err};
  if (mode != Mode::analyze) {
    if (opt.seed) {
      c.seed = *opt.seed;
    } else if (sc->seed) {
      c.seed = *sc->seed;
    } else {
      throw ValidationError("no seed: set 'seed' in the scenario or pass --seed");
    }
  }

  std::error_code ec;
  fs::create_directories(opt.out, ec);
  if (ec) throw IoError(fmt::format("cannot create output directory '{}'", opt.out.string()));

  switch (mode) {
    case Mode::counts: do_counts(c); break;
    case Mode::scan: do_scan(c); break;
    case Mode::calibrate: do_calibrate(c); break;
    case Mode::optimize: do_optimize(c); break;
    case Mode::klyshko: do_klyshko(c); break;
    case Mode::analyze: do_analyze(c); break;
  }
  return exit_ok;
}

}  // namespace

int run_command(const CommandOptions& options, std::ostream& log, std::ostream& err) {
  try {
    return execute(options, log, err);
  } catch (const ParseError& e) {
    fmt::print(err, "error: {}", e.what());
    if (e.line() > 0) fmt::print(err, " (line {}", e.line());
    if (e.line() > 0 && !e.field().empty()) fmt::print(err, ", field {}", e.field());
    if (e.line() > 0) fmt::print(err, ")");
    fmt::print(err, "\n");
    return exit_validation;
  } catch (const NoConvergenceError& e) {
    fmt::print(err, "error: {} (best residual {:.4g})\n", e.what(), e.best_residual());
    return exit_no_convergence;
  } catch (const InfeasibleError& e) {
    fmt::print(err, "error: {} (best achievable efficiency {:.4f})\n", e.what(), e.best_achievable());
    return exit_no_convergence;
  } catch (const IoError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_io;
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_validation;
  }
}

}  // namespace hsps::cli
