#include <algorithm>
#include <cmath>
#include <numbers>

#include "fic/scenario.hpp"

namespace fic::sim {

namespace {

// Channel deliveries due within this margin of a tick are taken on that tick.
constexpr double kTickSnap = 1e-9;

net::LinkConfig link_for(const net::LinkConfig& base, std::uint64_t stream) {
  net::LinkConfig cfg = base;
  cfg.seed = base.seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
  return cfg;
}

VecXd initial_configuration(const ScenarioConfig& cfg) {
  if (cfg.initial_q) return *cfg.initial_q;
  if (std::holds_alternative<TwoLinkArm<double>>(cfg.plant))
    return (VecXd(2) << std::numbers::pi / 6, std::numbers::pi / 2).finished();
  if (const auto* c = std::get_if<CircleReference>(&cfg.reference))
    return circle_reference(0, c->center, c->radius, c->period);
  if (const auto* w = std::get_if<WaypointReference>(&cfg.reference); w && !w->points.empty())
    return w->points.front().x;
  return VecXd::Zero(3);
}

bool affects(LinkSelector sel, LinkSelector channel) {
  return sel == LinkSelector::kBoth || sel == channel;
}

template <typename Payload>
void schedule_outages(net::DelayChannel<Payload>& ch, const std::vector<ScenarioEvent>& events,
                      LinkSelector which) {
  std::optional<double> down_since;
  for (const auto& e : events) {
    if (!affects(e.link, which)) continue;
    if (e.kind == EventKind::kDisconnect && !down_since) {
      down_since = e.t;
    } else if (e.kind == EventKind::kReconnect && down_since) {
      ch.set_link_state({*down_since, e.t});
      down_since.reset();
    }
  }
  if (down_since) ch.set_link_state({*down_since});
}

const char* event_name(EventKind k) {
  switch (k) {
    case EventKind::kDisconnect: return "disconnect";
    case EventKind::kReconnect: return "reconnect";
    default: return "bond_rearm";
  }
}

}  // namespace

TeleopSimulation::TeleopSimulation(const ScenarioConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      dt_(1.0 / cfg.rate),
      total_ticks_(std::llround(cfg.duration * cfg.rate)),
      master_fic_(cfg.master_fic),
      replica_fic_(cfg.replica_fic),
      plant_(make_plant_state(cfg.plant, initial_configuration(cfg))),
      m2r_(link_for(cfg.link, 0)),
      r2m_(link_for(cfg.link, 1)) {
  plant_.bond = cfg_.bond;
  const Vec3d start = forward_kinematics(cfg_.plant, plant_.q);
  if (cfg_.bond_anchor_at_start) plant_.bond.anchor = start;
  planner_ = make_planner(start, cfg_.planner);
  waypoint_target_ = start;

  sorted_events_ = cfg_.events;
  std::stable_sort(sorted_events_.begin(), sorted_events_.end(),
                   [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.t < b.t; });
  schedule_outages(m2r_, sorted_events_, LinkSelector::kMasterToReplica);
  schedule_outages(r2m_, sorted_events_, LinkSelector::kReplicaToMaster);
}

OperatorSample TeleopSimulation::operator_input(double t) const {
  if (live_input_) {
    OperatorSample s = *live_input_;
    s.t = t;
    return s;
  }
  if (cfg_.operator_source == OperatorSource::kScripted) return cfg_.trace.at(t);
  return OperatorSample{t};
}

void TeleopSimulation::apply_events(double t) {
  while (next_event_ < sorted_events_.size() && sorted_events_[next_event_].t <= t + kTickSnap) {
    const auto& ev = sorted_events_[next_event_++];
    if (ev.kind == EventKind::kBondRearm) {
      plant_.bond.attached = true;
      plant_.bond.anchor = ev.anchor.value_or(forward_kinematics(cfg_.plant, plant_.q));
    }
    pending_events_.push_back({t, event_name(ev.kind)});
  }
}

std::vector<RunEvent> TeleopSimulation::take_events() {
  std::vector<RunEvent> out;
  out.swap(pending_events_);
  return out;
}

LogRow TeleopSimulation::step() {
  const double t = time();
  const double t_poll = t + kTickSnap;
  apply_events(t);

  // master side
  const OperatorSample in = operator_input(t);
  master_ = update_master(master_, in.x_master, in.mode, in.gain, dt_, cfg_.velocity_gain);
  for (const auto& env : r2m_.poll(t_poll)) feedback_force_ = env.payload.f_r;
  master_force_ = fic::master_force(master_.x_master, feedback_force_, master_.gain, master_fic_);
  m2r_.send({t, master_.x_prime_d}, t);

  // replica side
  for (const auto& env : m2r_.poll(t_poll)) replica_teleop_ = env.payload.x_prime_d;

  const auto& pp = cfg_.planner;
  if (const auto* c = std::get_if<CircleReference>(&cfg_.reference)) {
    const Vec3d target = circle_reference(t, c->center, c->radius, c->period);
    planner_ = track_target(planner_, pp, target, pp.desired_speed);
    planner_ = fic::step(planner_, pp, target, dt_);
  } else if (const auto* w = std::get_if<WaypointReference>(&cfg_.reference)) {
    while (next_waypoint_ < w->points.size() && w->points[next_waypoint_].t <= t + kTickSnap) {
      waypoint_target_ = w->points[next_waypoint_++].x;
      planner_ = set_target(planner_, pp, waypoint_target_, pp.desired_speed);
    }
    planner_ = fic::step(planner_, pp, waypoint_target_, dt_);
  }

  const Vec3d x_d = compose_setpoint(replica_teleop_, planner_.position);
  const auto cmd = replica_torque(cfg_.plant, plant_.q, plant_.q_dot, x_d, replica_fic_);

  const Vec3d x_r = forward_kinematics(cfg_.plant, plant_.q);
  const Vec3d v_r = task_velocity(cfg_.plant, plant_);
  const Vec3d f_contact = contact_forces(x_r, v_r, cfg_.obstacles);
  const auto [f_bond, bond_next] = bond_force(x_r, plant_.bond);
  const bool attached = plant_.bond.attached;
  if (attached && !bond_next.attached) pending_events_.push_back({t, "bond_break"});
  plant_.bond = bond_next;
  const Vec3d f_ext = f_contact + f_bond;

  r2m_.send({t, x_r, f_ext}, t);

  LogRow row;
  row.t = t;
  row.x_d = x_d;
  row.x_prime_d = replica_teleop_;
  row.x_dprime_d = planner_.position;
  row.x_r = x_r;
  row.error = cmd.error;
  row.task_force = cmd.task_force;
  row.external_force = f_ext;
  row.bond_attached = attached;
  for (int i = 0; i < 3; ++i) row.phase[i] = static_cast<int>(replica_fic_.state(i).phase);
  row.m2r_in_flight = m2r_.in_flight();
  row.r2m_in_flight = r2m_.in_flight();

  plant_ = step_dynamics(cfg_.plant, plant_, cmd.tau, f_ext, dt_);
  ++tick_;
  return row;
}

RunLog run_scenario(const ScenarioConfig& cfg) {
  TeleopSimulation sim(cfg);
  RunLog log;
  log.meta.name = cfg.name;
  log.meta.config_hash = config_hash(cfg);
  log.meta.seed = cfg.seed;
  log.meta.live = false;
  log.meta.rate = cfg.rate;
  log.meta.delay = cfg.link.delay;
  log.meta.saturation_error = cfg.replica_fic.saturation_error();
  log.meta.max_force = cfg.replica_fic.max_force();
  log.rows.reserve(static_cast<std::size_t>(sim.total_ticks()));

  try {
    while (sim.tick() < sim.total_ticks()) {
      log.rows.push_back(sim.step());
      for (auto& e : sim.take_events()) log.events.push_back(std::move(e));
    }
  } catch (const SimulationError& e) {
    log.aborted = true;
    log.diagnostic = e.what();
  }
  log.m2r_stats = sim.m2r().stats();
  log.r2m_stats = sim.r2m().stats();
  return log;
}

}  // namespace fic::sim
