#pragma once

// Scenario description, the closed-loop simulation that wires master,
// channel, planner, replica and plant together, and the run log / metrics.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fic/channel.hpp"
#include "fic/fic_core.hpp"
#include "fic/planner.hpp"
#include "fic/plant.hpp"
#include "fic/teleop.hpp"

namespace fic::sim {

using Vec3d = Vec3<double>;
using VecXd = VecX<double>;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "1.0.0";

struct OperatorSample {
  double t = 0;
  Vec3d x_master = Vec3d::Zero();
  double gain = 0;  // raw grasp input, clamped by the master
  TeleopMode mode = TeleopMode::kOffset;
};

/// Time-stamped operator rows; positions and gain are interpolated linearly,
/// the mode is held from the latest row at or before t.
class OperatorTrace {
 public:
  OperatorTrace() = default;
  explicit OperatorTrace(std::vector<OperatorSample> samples);

  OperatorSample at(double t) const;
  const std::vector<OperatorSample>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }

  /// Reads `t,x,y,z,k_h,mode` rows (header line required).
  static OperatorTrace read_csv(const std::filesystem::path& path);

 private:
  std::vector<OperatorSample> samples_;
};

struct CircleReference {
  Vec3d center = Vec3d::Zero();
  double radius = 0.1;
  double period = 5;
};

struct Waypoint {
  double t = 0;
  Vec3d x = Vec3d::Zero();
};

struct WaypointReference {
  std::vector<Waypoint> points;
};

using Reference = std::variant<std::monostate, CircleReference, WaypointReference>;

Vec3d circle_reference(double t, const Vec3d& center, double radius, double period);

enum class OperatorSource { kScripted, kLive };
enum class LinkSelector { kMasterToReplica, kReplicaToMaster, kBoth };
enum class EventKind { kDisconnect, kReconnect, kBondRearm };

struct ScenarioEvent {
  EventKind kind = EventKind::kDisconnect;
  double t = 0;
  LinkSelector link = LinkSelector::kBoth;
  std::optional<Vec3d> anchor;  // bond re-arm point; defaults to the end effector
};

struct ScenarioConfig {
  std::string name = "unnamed";
  PlantModel<double> plant = PointMass<double>{};
  std::optional<VecXd> initial_q;
  FicParams<double> replica_fic{200, 0.05, 20, 0.9};
  FicParams<double> master_fic{100, 0.05, 5, 0.9};
  PlannerParams<double> planner{4, 0.2};
  net::LinkConfig link;
  Reference reference;
  OperatorSource operator_source = OperatorSource::kScripted;
  OperatorTrace trace;
  std::vector<Obstacle<double>> obstacles;
  BondState<double> bond;
  bool bond_anchor_at_start = false;  // anchor the bond at the initial end effector
  std::vector<ScenarioEvent> events;
  double duration = 10;
  double rate = 1000;
  std::uint64_t seed = 0;
  double velocity_gain = 1;
  double frame_rate = 60;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

ScenarioConfig parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);
nlohmann::json to_json(const ScenarioConfig& cfg);

/// 64-bit FNV-1a of the canonical JSON form.
std::uint64_t config_hash(const ScenarioConfig& cfg);

// ---------------------------------------------------------------------------
// run log

struct LogRow {
  double t = 0;
  Vec3d x_d = Vec3d::Zero();
  Vec3d x_prime_d = Vec3d::Zero();
  Vec3d x_dprime_d = Vec3d::Zero();
  Vec3d x_r = Vec3d::Zero();
  Vec3d error = Vec3d::Zero();
  Vec3d task_force = Vec3d::Zero();
  Vec3d external_force = Vec3d::Zero();
  bool bond_attached = false;
  std::array<int, 3> phase{};  // 0 divergence, 1 convergence
  std::uint64_t m2r_in_flight = 0;
  std::uint64_t r2m_in_flight = 0;

  bool operator==(const LogRow&) const = default;
};

struct RunEvent {
  double t = 0;
  std::string kind;

  bool operator==(const RunEvent&) const = default;
};

struct RunMetadata {
  std::string name;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  bool live = false;
  double rate = 1000;
  double delay = 0;
  double saturation_error = 0.05;
  double max_force = 20;

  bool operator==(const RunMetadata&) const = default;
};

struct RunLog {
  RunMetadata meta;
  std::vector<LogRow> rows;
  std::vector<RunEvent> events;
  net::ChannelStats m2r_stats;
  net::ChannelStats r2m_stats;
  bool aborted = false;
  std::string diagnostic;
};

struct Metrics {
  Vec3d max_abs_error = Vec3d::Zero();
  double free_motion_fraction = 1;  // vacuously 1 when no free-motion tick exists
  double max_task_force = 0;        // largest per-axis |task force|
  double max_contact_force = 0;     // largest |external force|
  double energy_balance = 0;        // net controller work output, J
  std::optional<double> bond_break_time;

  bool operator==(const Metrics&) const = default;
};

/// Metrics over a log. A free-motion tick has exactly zero external force.
/// Throws std::invalid_argument on an empty log.
Metrics compute_metrics(const RunLog& log);

nlohmann::json to_json(const Metrics& m);

// ---------------------------------------------------------------------------
// closed loop

struct TeleopCommand {
  double t = 0;
  Vec3d x_prime_d = Vec3d::Zero();
};

struct ReplicaFeedback {
  double t = 0;
  Vec3d x_r = Vec3d::Zero();
  Vec3d f_r = Vec3d::Zero();
};

/// One deterministic closed loop: master -> channel -> replica -> plant.
class TeleopSimulation {
 public:
  explicit TeleopSimulation(const ScenarioConfig& cfg);

  /// Advances one tick and returns the row describing it. Throws
  /// SimulationError if the plant state goes non-finite.
  LogRow step();

  /// Overrides the operator input (live sessions); held until replaced.
  void set_operator_input(const OperatorSample& s) { live_input_ = s; }

  long tick() const { return tick_; }
  double time() const { return static_cast<double>(tick_) / cfg_.rate; }
  long total_ticks() const { return total_ticks_; }

  const Vec3d& master_force() const { return master_force_; }
  const Vec3d& feedback_force() const { return feedback_force_; }  // F_R as seen by the master
  const BondState<double>& bond() const { return plant_.bond; }
  const ScenarioConfig& config() const { return cfg_; }
  const net::DelayChannel<TeleopCommand>& m2r() const { return m2r_; }
  const net::DelayChannel<ReplicaFeedback>& r2m() const { return r2m_; }

  /// Events raised since the previous call.
  std::vector<RunEvent> take_events();

 private:
  OperatorSample operator_input(double t) const;
  void apply_events(double t);

  ScenarioConfig cfg_;
  double dt_;
  long tick_ = 0;
  long total_ticks_;

  FicAttractor<double, 3> master_fic_;
  FicAttractor<double, 3> replica_fic_;
  MasterState<double> master_;
  PlannerState<double> planner_;
  PlantState<double> plant_;
  net::DelayChannel<TeleopCommand> m2r_;
  net::DelayChannel<ReplicaFeedback> r2m_;

  Vec3d replica_teleop_ = Vec3d::Zero();  // latest x'_d received by the replica
  Vec3d feedback_force_ = Vec3d::Zero();
  Vec3d master_force_ = Vec3d::Zero();
  std::size_t next_waypoint_ = 0;
  Vec3d waypoint_target_;
  std::size_t next_event_ = 0;
  std::vector<ScenarioEvent> sorted_events_;
  std::vector<RunEvent> pending_events_;
  std::optional<OperatorSample> live_input_;
};

/// Runs a scripted scenario to completion. A non-finite plant state ends the
/// run early with `aborted` set and the diagnostic filled in.
RunLog run_scenario(const ScenarioConfig& cfg);

}  // namespace fic::sim
