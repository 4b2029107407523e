#include "fic/session.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <iostream>
#include <mutex>
#include <thread>

#include "fic/line_socket.hpp"
#include "fic/wire.hpp"

namespace fic::net {

namespace {

using Clock = std::chrono::steady_clock;
using namespace std::chrono_literals;

template <typename T>
class MessageQueue {
 public:
  void push(T v) {
    std::lock_guard lock(mu_);
    items_.push_back(std::move(v));
  }
  std::deque<T> drain() {
    std::lock_guard lock(mu_);
    std::deque<T> out;
    out.swap(items_);
    return out;
  }

 private:
  std::mutex mu_;
  std::deque<T> items_;
};

std::ostream& log_stream(const SessionOptions& opts) { return opts.log ? *opts.log : std::clog; }

bool stop_requested(const SessionOptions& opts) { return opts.stop && opts.stop->load(); }

Clock::duration scaled(double seconds, double factor) {
  return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds / factor));
}

bool is_wire_event(const std::string& kind) {
  return kind == "disconnect" || kind == "reconnect" || kind == "bond_break";
}

}  // namespace

sim::RunLog serve_session(const sim::ScenarioConfig& cfg, const SessionOptions& opts) {
  if (cfg.operator_source != sim::OperatorSource::kLive)
    throw std::invalid_argument("serve_session: scenario operator source must be 'live'");
  if (!(opts.real_time_factor > 0)) throw std::invalid_argument("serve_session: real_time_factor must be positive");

  sim::TeleopSimulation simulation(cfg);
  sim::RunLog log;
  log.meta.name = cfg.name;
  log.meta.config_hash = sim::config_hash(cfg);
  log.meta.seed = cfg.seed;
  log.meta.live = true;
  log.meta.rate = cfg.rate;
  log.meta.delay = cfg.link.delay;
  log.meta.saturation_error = cfg.replica_fic.saturation_error();
  log.meta.max_force = cfg.replica_fic.max_force();

  LineListener listener(opts.bind_address, opts.port);
  auto& out_log = log_stream(opts);
  out_log << "serve: listening on " << opts.bind_address << ":" << listener.port() << std::endl;
  if (opts.on_listening) opts.on_listening(listener.port());

  MessageQueue<sim::OperatorSample> inputs;
  MessageQueue<std::string> outbound;
  MessageQueue<std::string> client_events;
  std::atomic<bool> done{false};

  std::thread io([&] {
    std::optional<LineSocket> client;
    auto drop_client = [&](const char* why) {
      client.reset();
      out_log << "serve: client disconnected (" << why << "), simulation continues" << std::endl;
      client_events.push("client_disconnect");
    };
    while (!done.load()) {
      if (!client) {
        if (auto s = listener.accept(5ms)) {
          client = std::move(*s);
          out_log << "serve: client connected" << std::endl;
          client_events.push("client_connect");
        }
      } else {
        bool closed = false;
        for (const auto& line : client->read_lines(2ms, closed)) {
          if (line.empty()) continue;
          try {
            const WireMessage msg = parse_message(line);
            if (const auto* in = std::get_if<OperatorInput>(&msg)) {
              inputs.push({in->t, in->x_m, in->k_h, in->mode});
            } else {
              client->send_line(encode(ErrorMessage{"only operator_input messages are accepted"}));
            }
          } catch (const ProtocolError& e) {
            client->send_line(encode(ErrorMessage{e.what()}));
          }
        }
        if (closed || !client->is_open()) drop_client("socket closed");
      }
      for (auto& line : outbound.drain()) {
        if (client && !client->send_line(line)) drop_client("send failed");
      }
    }
  });

  const long total = opts.max_duration ? std::llround(*opts.max_duration * cfg.rate) : simulation.total_ticks();
  const long decimation = std::max(1L, std::lround(cfg.rate / cfg.frame_rate));
  const double dt = 1.0 / cfg.rate;
  const auto start = Clock::now();
  log.rows.reserve(static_cast<std::size_t>(std::max(total, 0L)));

  try {
    for (long k = 0; k < total && !stop_requested(opts); ++k) {
      for (const auto& in : inputs.drain()) simulation.set_operator_input(in);
      const sim::LogRow row = simulation.step();
      log.rows.push_back(row);
      for (auto& e : simulation.take_events()) {
        if (is_wire_event(e.kind)) outbound.push(encode(EventMessage{e.kind, e.t}));
        log.events.push_back(std::move(e));
      }
      for (auto& kind : client_events.drain()) log.events.push_back({row.t, std::move(kind)});
      if (k % decimation == 0) {
        StateFrame f;
        f.t = row.t;
        f.x_r = row.x_r;
        f.x_d = row.x_d;
        f.f_r = simulation.feedback_force();
        f.f_master = simulation.master_force();
        f.bond = row.bond_attached;
        f.delay = cfg.link.delay;
        outbound.push(encode(f));
      }
      std::this_thread::sleep_until(start + scaled(static_cast<double>(k + 1) * dt, opts.real_time_factor));
    }
  } catch (const SimulationError& e) {
    log.aborted = true;
    log.diagnostic = e.what();
    out_log << "serve: " << e.what() << std::endl;
  }
  // Let the I/O thread flush the last frames before shutting down.
  std::this_thread::sleep_for(20ms);
  done = true;
  io.join();

  log.m2r_stats = simulation.m2r().stats();
  log.r2m_stats = simulation.r2m().stats();
  return log;
}

void replay_log(const sim::RunLog& log, const SessionOptions& opts, double frame_rate) {
  if (log.rows.empty()) throw std::invalid_argument("replay_log: empty log");
  if (!(opts.real_time_factor > 0) || !(frame_rate > 0))
    throw std::invalid_argument("replay_log: real_time_factor and frame_rate must be positive");
  LineListener listener(opts.bind_address, opts.port);
  auto& out_log = log_stream(opts);
  out_log << "replay: listening on " << opts.bind_address << ":" << listener.port() << std::endl;
  if (opts.on_listening) opts.on_listening(listener.port());

  std::optional<LineSocket> client;
  while (!client && !stop_requested(opts)) client = listener.accept(50ms);
  if (!client) return;
  out_log << "replay: client connected" << std::endl;

  const long decimation = std::max(1L, std::lround(log.meta.rate / frame_rate));
  const double t0 = log.rows.front().t;
  const auto start = Clock::now();
  std::size_t next_event = 0;
  for (std::size_t k = 0; k < log.rows.size() && !stop_requested(opts); ++k) {
    const auto& row = log.rows[k];
    while (next_event < log.events.size() && log.events[next_event].t <= row.t) {
      const auto& e = log.events[next_event++];
      if (is_wire_event(e.kind) && !client->send_line(encode(EventMessage{e.kind, e.t}))) return;
    }
    if (k % static_cast<std::size_t>(decimation) != 0) continue;
    std::this_thread::sleep_until(start + scaled(row.t - t0, opts.real_time_factor));
    StateFrame f;
    f.t = row.t;
    f.x_r = row.x_r;
    f.x_d = row.x_d;
    f.f_r = row.external_force;
    f.bond = row.bond_attached;
    f.delay = log.meta.delay;
    if (!client->send_line(encode(f))) {
      out_log << "replay: client disconnected" << std::endl;
      return;
    }
  }
}

}  // namespace fic::net
