#pragma once

// Simulated master<->replica link: constant latency plus bounded uniform
// jitter, seeded random drops, and scripted disconnect intervals. The channel
// is a passive queue; the scheduler calls send/poll at its own ticks.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace fic::net {

struct LinkConfig {
  double delay = 0;      // s
  double jitter = 0;     // s, upper bound of the extra uniform latency
  double drop_prob = 0;  // [0, 1]
  std::uint64_t seed = 0;
  bool ordered = true;   // latest-wins: stale envelopes are discarded

  void validate() const {
    if (!(delay >= 0) || !(jitter >= 0)) throw std::invalid_argument("LinkConfig: delay and jitter must be >= 0");
    if (!(drop_prob >= 0 && drop_prob <= 1)) throw std::invalid_argument("LinkConfig: drop_prob must lie in [0, 1]");
  }
};

template <typename Payload>
struct Envelope {
  Payload payload;
  double t_send = 0;
  double t_deliver = 0;
  std::uint64_t seq = 0;
};

struct ChannelStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t stale = 0;
  std::uint64_t dead_link = 0;

  std::uint64_t in_flight() const { return sent - delivered - dropped - stale - dead_link; }
};

/// Link outage from `disconnect_at` until `reconnect_at` (half-open).
struct LinkOutage {
  double disconnect_at = 0;
  double reconnect_at = std::numeric_limits<double>::infinity();
};

template <typename Payload>
class DelayChannel {
 public:
  explicit DelayChannel(LinkConfig cfg) : cfg_(cfg), rng_(cfg.seed) { cfg_.validate(); }

  /// Schedules an outage. Outages must be added in non-decreasing time order.
  void set_link_state(const LinkOutage& outage) {
    if (!(outage.reconnect_at >= outage.disconnect_at))
      throw std::invalid_argument("set_link_state: reconnect before disconnect");
    if (!outages_.empty() && outage.disconnect_at < outages_.back().reconnect_at)
      throw std::invalid_argument("set_link_state: outages must be non-decreasing in time");
    outages_.push_back(outage);
  }

  bool connected(double t) const {
    return std::none_of(outages_.begin(), outages_.end(),
                        [t](const LinkOutage& o) { return t >= o.disconnect_at && t < o.reconnect_at; });
  }

  /// Enqueues `payload`. Sends over a dead link or lost to the drop draw are
  /// discarded silently (and counted).
  void send(Payload payload, double t_now) {
    const std::uint64_t seq = next_seq_++;
    ++stats_.sent;
    if (!connected(t_now)) {
      ++stats_.dead_link;
      return;
    }
    const double drop_draw = uniform();
    const double jitter_draw = uniform();
    if (drop_draw < cfg_.drop_prob) {
      ++stats_.dropped;
      return;
    }
    const double t_deliver = t_now + cfg_.delay + cfg_.jitter * jitter_draw;
    queue_.push_back({std::move(payload), t_now, t_deliver, seq});
  }

  /// Returns every envelope due at t_now (t_deliver <= t_now) in seq order.
  std::vector<Envelope<Payload>> poll(double t_now) {
    std::vector<Envelope<Payload>> due;
    auto split = std::stable_partition(queue_.begin(), queue_.end(),
                                       [t_now](const Envelope<Payload>& e) { return e.t_deliver > t_now; });
    due.assign(std::make_move_iterator(split), std::make_move_iterator(queue_.end()));
    queue_.erase(split, queue_.end());
    std::sort(due.begin(), due.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });

    std::vector<Envelope<Payload>> out;
    out.reserve(due.size());
    for (auto& env : due) {
      if (cfg_.ordered && has_delivered_ && env.seq < last_delivered_seq_) {
        ++stats_.stale;
        continue;
      }
      has_delivered_ = true;
      last_delivered_seq_ = env.seq;
      ++stats_.delivered;
      out.push_back(std::move(env));
    }
    return out;
  }

  const ChannelStats& stats() const { return stats_; }
  std::uint64_t in_flight() const { return stats_.in_flight(); }
  const LinkConfig& config() const { return cfg_; }

 private:
  // 53-bit uniform in [0, 1) straight from the engine, so schedules do not
  // depend on the standard library's distribution implementation.
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  LinkConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<Envelope<Payload>> queue_;
  std::vector<LinkOutage> outages_;
  ChannelStats stats_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t last_delivered_seq_ = 0;
  bool has_delivered_ = false;
};

}  // namespace fic::net
