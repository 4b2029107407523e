#pragma once

// Live operator sessions and log replay over a TCP line protocol.

#include <atomic>
#include <functional>
#include <optional>
#include <ostream>

#include "fic/scenario.hpp"

namespace fic::net {

struct SessionOptions {
  int port = 0;                      // 0 picks an ephemeral port
  std::string bind_address = "127.0.0.1";
  double real_time_factor = 1;       // >1 runs faster than wall clock
  std::optional<double> max_duration;  // overrides the scenario duration
  std::function<void(int)> on_listening;  // receives the bound port
  const std::atomic<bool>* stop = nullptr;
  std::ostream* log = nullptr;       // server-side event log
};

/// Runs a live-operator scenario paced by the wall clock. Operator inputs
/// from the (single) connected client pass through the configured
/// master->replica delay; state frames go out at cfg.frame_rate. A client
/// disconnect leaves the last input held. Returns the (non-reproducible) log.
sim::RunLog serve_session(const sim::ScenarioConfig& cfg, const SessionOptions& opts);

/// Streams a recorded log to one client as state frames at the recorded
/// pace, then closes the connection.
void replay_log(const sim::RunLog& log, const SessionOptions& opts, double frame_rate = 60);

}  // namespace fic::net
