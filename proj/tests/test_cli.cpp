#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "doctest.h"
#include "hsps/cli/commands.hpp"
#include "hsps/cli/output.hpp"
#include "hsps/cli/scenario.hpp"
#include "hsps/cli/timetags.hpp"
#include "hsps/electronics.hpp"
#include "hsps/errors.hpp"
#include "support/oracles.hpp"

using namespace hsps;
using namespace hsps::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(HSPS_SOURCE_DIR) / "scenarios";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hsps_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int run(CommandOptions opt, std::string* errors = nullptr) {
  std::ostringstream log;
  std::ostringstream err;
  const int code = run_command(opt, log, err);
  if (errors) *errors = err.str();
  return code;
}

const char* kSmall = R"(name: small
seed: 5
source:
  integration_time_s: 0.05
  coupled_pump_power_mw: 1.0
  mu_pairs: 2.0e-3
  mu_fluor: 4.0e-3
  fluor_lifetime_ns: 300
trigger_arm:
  slit: {center_nm: 801, window_nm: 30, resolution_nm: 2}
)";

}  // namespace

TEST_CASE("scenario parsing") {
  const auto sc = parse_scenario(kSmall);
  CHECK(sc.name == "small");
  CHECK(sc.mode == Mode::counts);
  CHECK(sc.seed == 5u);
  CHECK(sc.setup.source.mu_pairs == 2.0e-3);
  CHECK(sc.setup.source.fluor_lifetime_ns == 300.0);
  CHECK(sc.setup.trigger_arm.slit->window_nm == 30.0);
  CHECK(sc.setup.signal_arm.detector.quantum_efficiency == 0.6);
  CHECK(sc.setup.gate.gate_width_ns == 3.0);

  const auto fig3 = load_scenario(kScenarios / "paper_fig3.yaml");
  CHECK(fig3.report_time_s == 300.0);
  const auto fig2 = load_scenario(kScenarios / "paper_fig2_scan.yaml");
  CHECK(fig2.mode == Mode::scan);
  CHECK(fig2.scan.positions_um.size() == 51);
  CHECK(fig2.scan.window_nm() == doctest::Approx(2.0));
  CHECK(load_scenario(kScenarios / "klyshko_sweep.yaml").klyshko.trigger_transmittances.size() == 3);
}

TEST_CASE("scenario errors carry line and field") {
  auto expect_parse_error = [](const std::string& text, int line, const std::string& field) {
    try {
      parse_scenario(text);
      FAIL("no error");
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
      CHECK(e.field() == field);
    }
  };
  expect_parse_error("name: x\nsource:\n  mu_pairs: 1\n  mu_pears: 2\n", 4, "source.mu_pears");
  expect_parse_error("name: x\ngate:\n  gate_width_ns: wide\n", 3, "gate.gate_width_ns");
  expect_parse_error("name: x\nmode: dance\n", 2, "mode");
  expect_parse_error("seed: 1\n", 1, "name");
  expect_parse_error("name: x\nsource: [1, 2\n", 3, "");
  // Out-of-range physics is a validation error raised before anything runs.
  CHECK_THROWS_AS(parse_scenario("name: x\ntrigger_arm:\n  fiber_coupling: 1.5\n"), ValidationError);
}

TEST_CASE("time-tag parsing") {
  const auto tags = parse_time_tags(
      "# exported by a time tagger\n"
      "# units=ps\n"
      "# integration_time_s=0.25\n"
      "channel,timestamp\n"
      "t,1000\n"
      "2,2500\n"
      "Trigger,900\n"
      "signal,3000,extra\n"
      "\n"
      "1,5000\n");
  CHECK(tags.integration_time_s == 0.25);
  CHECK(tags.trigger_ns == std::vector<double>{0.9, 1.0, 5.0});
  CHECK(tags.signal_ns == std::vector<double>{2.5, 3.0});
  CHECK(tags.warnings.empty());

  const auto empty = parse_time_tags("");
  CHECK(empty.trigger_ns.empty());
  CHECK(empty.warnings.size() == 1);

  CHECK_THROWS_AS(parse_time_tags("trigger,1\n"), ParseError);
  CHECK_THROWS_AS(parse_time_tags("# units=ns\nidler,1\n"), ParseError);
  CHECK_THROWS_AS(parse_time_tags("# units=us\n"), ParseError);
  CHECK_THROWS_AS(parse_time_tags("# units=ns\ntrigger,1\ntrigger,x\n"), ParseError);
  TimeTagOptions tight;
  tight.sort_buffer = 2;
  CHECK_NOTHROW(parse_time_tags("# units=ns\nt,5\nt,3\nt,4\nt,6\n", tight));
  CHECK_THROWS_AS(parse_time_tags("# units=ns\nt,5\nt,6\nt,7\nt,1\n", tight), ParseError);
}

TEST_CASE("simulate, dump, analyze round trip") {
  const auto dir = scratch("roundtrip");
  spit(dir / "s.yaml", std::string(kSmall) + "outputs: {dump_emission: true, dump_detection: true}\n");
  CommandOptions opt;
  opt.verb = "simulate";
  opt.scenario = dir / "s.yaml";
  opt.out = dir / "sim";
  REQUIRE(run(opt) == exit_ok);
  CHECK(fs::exists(dir / "sim" / "emission.csv"));
  CHECK(slurp(dir / "sim" / "emission.csv").rfind("# hsps emission v1\ntime_ns,wavelength_nm,polarization,origin,pair_id\n", 0) == 0);

  CommandOptions an;
  an.verb = "analyze";
  an.scenario = dir / "s.yaml";
  an.input = dir / "sim" / "detection.csv";
  an.out = dir / "ana";
  REQUIRE(run(an) == exit_ok);
  CHECK(slurp(dir / "ana" / "counts.csv") == slurp(dir / "sim" / "counts.csv"));
  for (const auto& e : fs::directory_iterator(dir / "sim")) CHECK(e.path().extension() != ".tmp");
}

TEST_CASE("zero source gives zero counts") {
  const auto dir = scratch("zero");
  spit(dir / "z.yaml", "name: zero\nseed: 1\nsource: {integration_time_s: 0.01, mu_pairs: 0}\n");
  CommandOptions opt;
  opt.verb = "run";
  opt.scenario = dir / "z.yaml";
  opt.out = dir;
  REQUIRE(run(opt) == exit_ok);
  CHECK(slurp(dir / "counts.csv") ==
        "# hsps counts v1\n"
        "gated,integration_time_s,s_trigger,s_signal,coincidences,accidentals,efficiency,brightness\n"
        "0,0.01,0,0,0,0,,0\n"
        "1,0.01,0,0,0,0,,0\n");
}

TEST_CASE("analyzing an empty file warns and succeeds") {
  const auto dir = scratch("empty");
  spit(dir / "empty.csv", "");
  CommandOptions opt;
  opt.verb = "analyze";
  opt.input = dir / "empty.csv";
  opt.out = dir;
  std::string err;
  CHECK(run(opt, &err) == exit_ok);
  CHECK(err.find("warning") != std::string::npos);
  CHECK(slurp(dir / "counts.csv").find("0,0,0,0,0,0,,\n") != std::string::npos);
}

TEST_CASE("external independent streams show the accidental rate") {
  const auto dir = scratch("poisson");
  const double rep = 87e6;
  const double period = 1e9 / rep;
  const std::uint64_t pulses = 20'000'000;
  const auto st = oracle::independent_pulsed_streams(pulses, period, 0.025, 0.025, 0.35, 9);
  REQUIRE(st.trigger.size() + st.signal.size() > 900000);
  const double T = pulses / rep;
  std::string text = fmt::format("# units=ps\n# integration_time_s={}\nchannel,time_ps\n", T);
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < st.trigger.size() || j < st.signal.size()) {
    if (j == st.signal.size() || (i < st.trigger.size() && st.trigger[i] < st.signal[j]))
      text += fmt::format("trigger,{}\n", st.trigger[i++] * 1000.0);
    else
      text += fmt::format("signal,{}\n", st.signal[j++] * 1000.0);
  }
  spit(dir / "tags.csv", text);
  CommandOptions opt;
  opt.verb = "analyze";
  opt.input = dir / "tags.csv";
  opt.out = dir;
  REQUIRE(run(opt) == exit_ok);
  const auto tags = read_time_tags(dir / "tags.csv");
  const auto c = count_run(tags.trigger_ns, tags.signal_ns, GateConfig{}, rep, T);
  CHECK(std::abs(c.coincidences - c.accidentals_analytic) <= 3.0 * std::sqrt(c.accidentals_analytic));
  CHECK(slurp(dir / "counts.csv").find(fmt::format("1,{},{},{},{},", format_number(T), c.s_trigger,
                                                   c.s_signal, c.coincidences)) != std::string::npos);
}

TEST_CASE("identical scenario and seed give identical files across thread counts") {
  const auto dir = scratch("determinism");
  spit(dir / "s.yaml", std::string(kSmall) +
                           "scan: {nm_per_um: -0.5, offset_nm: 1201, slit_width_um: 20, "
                           "positions_um: {start: 700, stop: 1100, step: 100}}\n");
  std::string first_counts;
  std::string first_scan;
  for (unsigned threads : {1u, 4u, 8u}) {
    CommandOptions opt;
    opt.scenario = dir / "s.yaml";
    opt.threads = threads;
    opt.verb = "simulate";
    opt.out = dir / fmt::format("sim{}", threads);
    REQUIRE(run(opt) == exit_ok);
    opt.verb = "scan";
    opt.out = dir / fmt::format("scan{}", threads);
    REQUIRE(run(opt) == exit_ok);
    const auto counts = slurp(dir / fmt::format("sim{}", threads) / "counts.csv");
    const auto scan = slurp(dir / fmt::format("scan{}", threads) / "scan.csv");
    if (threads == 1) {
      first_counts = counts;
      first_scan = scan;
    }
    CHECK(counts == first_counts);
    CHECK(scan == first_scan);
  }
  CHECK(slurp(dir / "sim1" / "report.txt") == slurp(dir / "sim8" / "report.txt"));

  CommandOptions other;
  other.verb = "simulate";
  other.scenario = dir / "s.yaml";
  other.seed = 6;
  other.out = dir / "seed6";
  REQUIRE(run(other) == exit_ok);
  CHECK(slurp(dir / "seed6" / "counts.csv") != first_counts);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  CommandOptions opt;
  opt.verb = "simulate";
  opt.out = dir;
  opt.scenario = dir / "missing.yaml";
  CHECK(run(opt) == exit_io);

  spit(dir / "bad.yaml", "name: x\nsource: {mu_pairs: -1}\n");
  opt.scenario = dir / "bad.yaml";
  CHECK(run(opt) == exit_validation);

  spit(dir / "noseed.yaml", "name: x\n");
  opt.scenario = dir / "noseed.yaml";
  std::string err;
  CHECK(run(opt, &err) == exit_validation);
  CHECK(err.find("seed") != std::string::npos);

  spit(dir / "cal.yaml", std::string(kSmall) + "calibrate: {eta_ungated: 0.9, eta_gated: 0.95, verify: false}\n");
  opt.verb = "calibrate";
  opt.scenario = dir / "cal.yaml";
  CHECK(run(opt) == exit_no_convergence);
  CHECK(slurp(dir / "calibration.csv").find("\n0,0.9,0.95,") != std::string::npos);

  spit(dir / "opt.yaml", std::string(kSmall) + "optimize: {efficiency_floor: 0.9}\n");
  opt.verb = "optimize-window";
  opt.scenario = dir / "opt.yaml";
  CHECK(run(opt) == exit_no_convergence);

  opt.verb = "dance";
  CHECK(run(opt) == exit_validation);
}

TEST_CASE("atomic writes leave no partial file behind") {
  const auto dir = scratch("atomic");
  write_file_atomic(dir / "a.txt", "hello");
  CHECK(slurp(dir / "a.txt") == "hello");
  {
    AtomicFile f(dir / "b.txt");
    f.write("partial");
  }
  CHECK_FALSE(fs::exists(dir / "b.txt"));
  CHECK_FALSE(fs::exists(dir / "b.txt.tmp"));
  CHECK_THROWS_AS(write_file_atomic(dir / "no" / "such" / "dir.txt", "x"), IoError);
}
