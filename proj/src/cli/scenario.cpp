#include "hsps/cli/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "hsps/errors.hpp"

namespace hsps::cli {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::counts: return "simulate";
    case Mode::scan: return "scan";
    case Mode::calibrate: return "calibrate";
    case Mode::optimize: return "optimize-window";
    case Mode::klyshko: return "klyshko";
    case Mode::analyze: return "analyze";
  }
  return "?";
}

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

// A YAML mapping whose keys are consumed one by one; leftovers are errors.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsMap())
      throw ParseError(fmt::format("'{}' must be a mapping", display()), line_of(node_), display());
  }

  bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    return node_[key];
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    out = as<T>(raw(key), field(key));
  }

  template <class T>
  T require(const std::string& key) {
    if (!has(key))
      throw ParseError(fmt::format("missing required field '{}'", field(key)), line_of(node_), field(key));
    return as<T>(raw(key), field(key));
  }

  std::optional<Section> child(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return Section(raw(key), field(key));
  }

  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key))
        throw ParseError(fmt::format("unknown field '{}'", field(key)), line_of(kv.first), field(key));
    }
  }

  template <class T>
  static T as(const YAML::Node& n, const std::string& field) {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ParseError(fmt::format("field '{}' has an invalid value", field), line_of(n), field);
    }
  }

 private:
  std::string display() const { return path_.empty() ? "document" : path_; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

template <class E>
E parse_enum(Section& s, const std::string& key, E fallback,
             std::initializer_list<std::pair<std::string_view, E>> names) {
  if (!s.has(key)) return fallback;
  const YAML::Node n = s.raw(key);
  const auto text = Section::as<std::string>(n, s.field(key));
  for (const auto& [name, value] : names)
    if (text == name) return value;
  throw ParseError(fmt::format("field '{}' has unknown value '{}'", s.field(key), text), line_of(n),
                   s.field(key));
}

SpectralShape read_shape(Section& parent, const std::string& key, const SpectralShape& fallback) {
  auto s = parent.child(key);
  if (!s) return fallback;
  const auto family = parse_enum(*s, "shape", fallback.family(),
                                 {{"gaussian", SpectralFamily::gaussian}, {"top_hat", SpectralFamily::top_hat}});
  double center = fallback.center();
  double width = fallback.width();
  s->read("center_nm", center);
  s->read("width_nm", width);
  s->finish();
  return family == SpectralFamily::gaussian ? SpectralShape::gaussian(center, width)
                                            : SpectralShape::top_hat(center, width);
}

void read_source(Section& s, SourceConfig& c) {
  s.read("rep_rate_hz", c.rep_rate_hz);
  s.read("integration_time_s", c.integration_time_s);
  s.read("coupled_pump_power_mw", c.coupled_pump_power_mw);
  s.read("mu_pairs", c.mu_pairs);
  s.read("mu_type1", c.mu_type1);
  s.read("mu_fluor", c.mu_fluor);
  s.read("fluor_lifetime_ns", c.fluor_lifetime_ns);
  s.read("fluor_trigger_fraction", c.fluor_trigger_fraction);
  c.type1_polarization = parse_enum(s, "type1_polarization", c.type1_polarization,
                                    {{"H", Polarization::H}, {"V", Polarization::V}});
  c.statistics = parse_enum(s, "photon_statistics", c.statistics, {{"poisson", PhotonStatistics::poisson}});
  c.pump = read_shape(s, "pump", c.pump);
  c.pdc = read_shape(s, "pdc", c.pdc);
  c.type1 = read_shape(s, "type1", c.type1);
  c.fluorescence = read_shape(s, "fluorescence", c.fluorescence);
  s.finish();
}

void read_arm(Section& s, ArmConfig& arm) {
  s.read("optics_transmission", arm.optics_transmission);
  s.read("fiber_coupling", arm.fiber_coupling);
  if (auto d = s.child("detector")) {
    DetectorModel& m = arm.detector;
    d->read("quantum_efficiency", m.quantum_efficiency);
    d->read("jitter_sigma_ns", m.jitter_sigma_ns);
    d->read("dead_time_ns", m.dead_time_ns);
    d->read("dark_rate_hz", m.dark_rate_hz);
    m.dead_time_model = parse_enum(*d, "dead_time_model", m.dead_time_model,
                                   {{"non_paralyzable", DeadTimeModel::non_paralyzable},
                                    {"paralyzable", DeadTimeModel::paralyzable}});
    d->finish();
  }
  if (auto sl = s.child("slit")) {
    SlitFilter f;
    sl->read("center_nm", f.center_nm);
    sl->read("window_nm", f.window_nm);
    sl->read("resolution_nm", f.resolution_nm);
    sl->finish();
    arm.slit = f;
  }
  s.finish();
}

void read_gate(Section& s, GateConfig& g) {
  s.read("gate_width_ns", g.gate_width_ns);
  s.read("gate_delay_ns", g.gate_delay_ns);
  s.read("coincidence_window_ns", g.coincidence_window_ns);
  s.read("gating_enabled", g.gating_enabled);
  s.finish();
}

std::vector<double> read_positions(Section& s, const std::string& key) {
  if (!s.has(key)) return {};
  const YAML::Node n = s.raw(key);
  if (n.IsSequence()) return Section::as<std::vector<double>>(n, s.field(key));
  Section range(n, s.field(key));
  const auto start = range.require<double>("start");
  const auto stop = range.require<double>("stop");
  const auto step = range.require<double>("step");
  range.finish();
  if (!(step != 0.0) || (stop - start) / step < 0.0 || (stop - start) / step > 1.0e6)
    throw ParseError(fmt::format("'{}' range does not reach stop from start", s.field(key)), line_of(n),
                     s.field(key));
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

void read_scan(Section& s, analysis::ScanPlan& p) {
  s.read("nm_per_um", p.calibration.nm_per_um);
  s.read("offset_nm", p.calibration.offset_nm);
  s.read("slit_width_um", p.slit_width_um);
  s.read("resolution_nm", p.resolution_nm);
  p.positions_um = read_positions(s, "positions_um");
  s.finish();
}

void read_interval(Section& s, const std::string& key, analysis::Interval& out) {
  if (!s.has(key)) return;
  const YAML::Node n = s.raw(key);
  const auto v = Section::as<std::vector<double>>(n, s.field(key));
  if (v.size() != 2)
    throw ParseError(fmt::format("'{}' must be [lo, hi]", s.field(key)), line_of(n), s.field(key));
  out = {v[0], v[1]};
}

void read_calibration(Section& s, analysis::CalibrationRequest& r) {
  s.read("eta_ungated", r.eta_ungated);
  s.read("eta_gated", r.eta_gated);
  s.read("tolerance", r.tolerance);
  s.read("max_iterations", r.max_iterations);
  s.read("max_restarts", r.max_restarts);
  s.read("verify", r.verify);
  s.read("verify_time_s", r.verify_time_s);
  if (auto b = s.child("bounds")) {
    read_interval(*b, "mu_fluor", r.bounds.mu_fluor);
    read_interval(*b, "fluor_lifetime_ns", r.bounds.fluor_lifetime_ns);
    read_interval(*b, "mu_type1", r.bounds.mu_type1);
    b->finish();
  }
  s.finish();
}

void read_window(Section& s, analysis::WindowSearch& w) {
  s.read("center_min_nm", w.center_min_nm);
  s.read("center_max_nm", w.center_max_nm);
  s.read("center_step_nm", w.center_step_nm);
  s.read("width_min_nm", w.width_min_nm);
  s.read("width_max_nm", w.width_max_nm);
  s.read("width_step_nm", w.width_step_nm);
  s.read("efficiency_floor", w.efficiency_floor);
  s.finish();
}

void read_klyshko(Section& s, KlyshkoPlan& k) {
  s.read("trigger_transmittances", k.trigger_transmittances);
  s.read("pairs_per_point", k.pairs_per_point);
  s.finish();
}

void read_analyze(Section& s, AnalyzePlan& a, const std::filesystem::path& origin) {
  std::string input;
  s.read("input", input);
  if (!input.empty()) {
    a.input = input;
    if (a.input.is_relative() && !origin.empty()) a.input = origin.parent_path() / a.input;
  }
  if (s.has("integration_time_s")) a.integration_time_s = s.require<double>("integration_time_s");
  s.finish();
}

}  // namespace

void Scenario::validate() const {
  setup.validate();
  if (report_time_s && !(*report_time_s > 0.0)) throw ValidationError("report_time_s must be > 0");
  switch (mode) {
    case Mode::scan: scan.validate(); break;
    case Mode::optimize: window.validate(); break;
    case Mode::klyshko:
      if (klyshko.trigger_transmittances.empty())
        throw ValidationError("klyshko.trigger_transmittances is empty");
      if (!(klyshko.pairs_per_point > 0.0)) throw ValidationError("klyshko.pairs_per_point must be > 0");
      break;
    default: break;
  }
}

Scenario parse_scenario(const std::string& text, const std::filesystem::path& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(fmt::format("{}: {}", origin.string(), e.msg), e.mark.line + 1, {});
  }
  if (!root.IsDefined() || root.IsNull()) throw ParseError("scenario file is empty", 1, {});

  Scenario sc;
  Section top(root, "");
  sc.name = top.require<std::string>("name");
  sc.mode = parse_enum(top, "mode", Mode::counts,
                       {{"simulate", Mode::counts},
                        {"counts", Mode::counts},
                        {"scan", Mode::scan},
                        {"calibrate", Mode::calibrate},
                        {"optimize-window", Mode::optimize},
                        {"optimize", Mode::optimize},
                        {"klyshko", Mode::klyshko},
                        {"analyze", Mode::analyze}});
  if (top.has("seed")) sc.seed = top.require<std::uint64_t>("seed");
  if (top.has("report_time_s")) sc.report_time_s = top.require<double>("report_time_s");
  if (auto s = top.child("source")) read_source(*s, sc.setup.source);
  if (auto s = top.child("trigger_arm")) read_arm(*s, sc.setup.trigger_arm);
  if (auto s = top.child("signal_arm")) read_arm(*s, sc.setup.signal_arm);
  if (auto s = top.child("gate")) read_gate(*s, sc.setup.gate);
  if (auto s = top.child("scan")) read_scan(*s, sc.scan);
  if (auto s = top.child("calibrate")) read_calibration(*s, sc.calibration);
  if (auto s = top.child("optimize")) read_window(*s, sc.window);
  if (auto s = top.child("klyshko")) read_klyshko(*s, sc.klyshko);
  if (auto s = top.child("analyze")) read_analyze(*s, sc.analyze, origin);
  if (auto s = top.child("outputs")) {
    s->read("dump_emission", sc.dump_emission);
    s->read("dump_detection", sc.dump_detection);
    s->finish();
  }
  top.finish();
  sc.calibration.base = sc.setup;
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open scenario file '{}'", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path);
}

}  // namespace hsps::cli
