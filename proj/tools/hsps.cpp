#include <iostream>

#include <CLI11.hpp>

#include "hsps/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Heralded single-photon source simulator"};
  app.require_subcommand(1);

  hsps::cli::CommandOptions opt;
  std::string scenario;
  std::uint64_t seed = 0;
  std::string input;
  double integration_time_s = 0.0;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", scenario, "Scenario YAML file");
    cmd->add_option("--seed", seed, "Master seed (overrides the scenario)");
    cmd->add_option("--out", opt.out, "Output directory")->capture_default_str();
    cmd->add_option("--threads", opt.threads, "Worker threads")->capture_default_str();
  };
  const std::pair<const char*, const char*> verbs[] = {
      {"run", "Run the scenario's own mode"},
      {"simulate", "Simulate one run and count singles and coincidences"},
      {"scan", "Spectrally resolved scan over trigger slit positions"},
      {"calibrate", "Fit background parameters to gated/ungated efficiency targets"},
      {"optimize-window", "Find the trigger window with the highest brightness above an efficiency floor"},
      {"klyshko", "Conditional efficiency over a sweep of trigger-arm losses"},
      {"analyze", "Count an external channel,timestamp file"},
  };
  for (const auto& [name, help] : verbs) {
    auto* cmd = app.add_subcommand(name, help);
    common(cmd);
    if (std::string_view(name) == "analyze") {
      cmd->add_option("--input", input, "Time-tag CSV file");
      cmd->add_option("--integration-time-s", integration_time_s, "Integration time of the recording");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : hsps::cli::exit_validation;
  }

  auto* cmd = app.get_subcommands().front();
  opt.verb = cmd->get_name();
  if (!scenario.empty()) opt.scenario = scenario;
  if (cmd->count("--seed")) opt.seed = seed;
  if (!input.empty()) opt.input = input;
  if (cmd->get_name() == "analyze" && cmd->count("--integration-time-s")) opt.integration_time_s = integration_time_s;

  try {
    return hsps::cli::run_command(opt, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
