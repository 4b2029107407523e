#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fic/log_io.hpp"
#include "fic/scenario.hpp"
#include "fic/session.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void print_summary(const fic::sim::RunLog& log, double wall_seconds) {
  const auto m = fic::sim::compute_metrics(log);
  std::cout << "scenario      " << log.meta.name << "\n"
            << "rows          " << log.rows.size() << "\n"
            << "wall time     " << wall_seconds << " s\n"
            << fic::sim::to_json(m).dump(2) << "\n";
  if (log.aborted) std::cerr << "run aborted: " << log.diagnostic << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractal impedance teleoperation workbench"};
  app.require_subcommand(1);

  std::string scenario_path, log_path, format = "csv";
  std::optional<double> delay;
  std::optional<std::uint64_t> seed;
  int port = 0;
  double rtf = 1;
  std::optional<double> max_duration;

  auto* run = app.add_subcommand("run", "Run a scripted scenario deterministically");
  run->add_option("--scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--delay", delay, "Override the one-way link delay (s)")->check(CLI::NonNegativeNumber);
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--log", log_path, "Write the run log to this path");
  run->add_option("--format", format, "Log format")->check(CLI::IsMember({"csv", "jsonl"}));

  auto* metrics = app.add_subcommand("metrics", "Compute metrics from an exported log");
  metrics->add_option("--log", log_path, "Log file (csv or jsonl)")->required()->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "Run a live-operator scenario for a UI client");
  serve->add_option("--scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  serve->add_option("--port", port, "TCP port (0 picks one)")->required()->check(CLI::Range(0, 65535));
  serve->add_option("--delay", delay, "Override the one-way link delay (s)")->check(CLI::NonNegativeNumber);
  serve->add_option("--duration", max_duration, "Stop after this much simulated time (s)")
      ->check(CLI::PositiveNumber);
  serve->add_option("--real-time-factor", rtf, "Simulated seconds per wall second")->check(CLI::PositiveNumber);
  serve->add_option("--log", log_path, "Write the session log to this path");
  serve->add_option("--format", format, "Log format")->check(CLI::IsMember({"csv", "jsonl"}));

  auto* replay = app.add_subcommand("replay", "Stream a recorded log to a UI client");
  replay->add_option("--log", log_path, "Log file (csv or jsonl)")->required()->check(CLI::ExistingFile);
  replay->add_option("--port", port, "TCP port (0 picks one)")->required()->check(CLI::Range(0, 65535));
  replay->add_option("--real-time-factor", rtf, "Playback speed")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (*run || *serve) {
      auto cfg = fic::sim::load_scenario(scenario_path);
      if (delay) cfg.link.delay = *delay;
      if (seed) {
        cfg.seed = *seed;
        cfg.link.seed = *seed;
      }
      cfg.validate();

      fic::sim::RunLog log;
      const auto t0 = std::chrono::steady_clock::now();
      if (*run) {
        if (cfg.operator_source == fic::sim::OperatorSource::kLive) {
          std::cerr << "error: scenario '" << cfg.name << "' expects a live operator; use 'serve'\n";
          return 2;
        }
        log = fic::sim::run_scenario(cfg);
      } else {
        fic::net::SessionOptions opts;
        opts.port = port;
        opts.real_time_factor = rtf;
        opts.max_duration = max_duration;
        opts.stop = &g_stop;
        opts.log = &std::cerr;
        log = fic::net::serve_session(cfg, opts);
      }
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!log_path.empty()) fic::sim::export_log(log, log_path, fic::sim::parse_log_format(format));
      if (log.rows.empty()) {
        std::cerr << "error: no ticks were simulated\n";
        return 1;
      }
      print_summary(log, wall);
      return log.aborted ? 3 : 0;
    }
    if (*metrics) {
      const auto log = fic::sim::read_log(log_path);
      std::cout << fic::sim::to_json(fic::sim::compute_metrics(log)).dump(2) << "\n";
      return 0;
    }
    if (*replay) {
      const auto log = fic::sim::read_log(log_path);
      fic::net::SessionOptions opts;
      opts.port = port;
      opts.real_time_factor = rtf;
      opts.stop = &g_stop;
      opts.log = &std::cerr;
      fic::net::replay_log(log, opts);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
