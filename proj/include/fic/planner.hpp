#pragma once

// Harmonic trajectory planner producing the autonomous setpoint. Each axis
// runs the FIC attractor logic on the planner-to-target error, with the
// divergence acceleration capped by the limit derived from the commanded
// tangential speed.

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "fic/fic_core.hpp"

namespace fic {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
struct PlannerParams {
  static constexpr double kPeakSpeedFactor = 1.595;

  PlannerParams(Scalar natural_frequency, Scalar desired_speed)
      : natural_frequency(natural_frequency), desired_speed(desired_speed) {
    if (!(natural_frequency > 0) || !(desired_speed > 0))
      throw std::invalid_argument("PlannerParams: natural_frequency and desired_speed must be positive");
  }

  Scalar natural_frequency;  // rad/s
  Scalar desired_speed;      // m/s

  Scalar viscosity() const { return Scalar(0.01) * natural_frequency; }
  Scalar peak_speed_factor() const { return Scalar(kPeakSpeedFactor); }
};

template <typename Scalar>
struct PlannerState {
  Vec3<Scalar> position = Vec3<Scalar>::Zero();  // x''_d
  Vec3<Scalar> velocity = Vec3<Scalar>::Zero();
  Vec3<Scalar> acceleration = Vec3<Scalar>::Zero();  // last commanded, viscosity included

  std::array<FicState<Scalar>, 3> phase{};   // x_max holds the latched displacement
  Vec3<Scalar> switch_target = Vec3<Scalar>::Zero();
  Vec3<Scalar> switch_accel = Vec3<Scalar>::Zero();  // signed A_max per axis

  Vec3<Scalar> distance = Vec3<Scalar>::Zero();     // d at the last command
  Vec3<Scalar> accel_limit = Vec3<Scalar>::Zero();  // a_max
  Scalar speed_cap = 0;                             // v_max
  Scalar speed_limit = 0;                           // v_d used by the clamp
};

template <typename Scalar>
PlannerState<Scalar> make_planner(const Vec3<Scalar>& start, const PlannerParams<Scalar>& pp) {
  PlannerState<Scalar> st;
  st.position = start;
  st.speed_limit = pp.desired_speed;
  return st;
}

namespace detail {

template <typename Scalar>
void apply_motion_limits(PlannerState<Scalar>& st, const PlannerParams<Scalar>& pp,
                         const Vec3<Scalar>& target, Scalar desired_speed) {
  if (!target.allFinite() || !std::isfinite(desired_speed) || !(desired_speed > 0))
    throw std::invalid_argument("planner: invalid target or speed");
  st.distance = target - st.position;
  st.speed_limit = desired_speed;
  const Scalar dist = st.distance.norm();
  if (dist == 0) {
    st.speed_cap = 0;
    st.accel_limit.setZero();
    return;
  }
  st.speed_cap = pp.peak_speed_factor() * std::min(desired_speed, pp.natural_frequency * dist);
  const Scalar ratio = st.speed_cap / dist;
  st.accel_limit = 2 * st.distance * ratio * ratio;
}

}  // namespace detail

/// Issues a new command: recomputes v_max and a_max from the current distance
/// to `target` and restarts every axis in the divergence phase.
template <typename Scalar>
PlannerState<Scalar> set_target(const PlannerState<Scalar>& st, const PlannerParams<Scalar>& pp,
                                const Vec3<Scalar>& target, Scalar desired_speed) {
  PlannerState<Scalar> next = st;
  detail::apply_motion_limits(next, pp, target, desired_speed);
  next.phase = {};
  return next;
}

/// Streamed reference point: same limit computation as set_target but the
/// phase memory is kept, so convergence can happen on a moving target.
template <typename Scalar>
PlannerState<Scalar> track_target(const PlannerState<Scalar>& st, const PlannerParams<Scalar>& pp,
                                  const Vec3<Scalar>& target, Scalar desired_speed) {
  PlannerState<Scalar> next = st;
  detail::apply_motion_limits(next, pp, target, desired_speed);
  return next;
}

/// One planner tick towards `target` (semi-implicit Euler, velocity clamped
/// per axis to the commanded speed).
template <typename Scalar>
PlannerState<Scalar> step(const PlannerState<Scalar>& st, const PlannerParams<Scalar>& pp,
                          const Vec3<Scalar>& target, Scalar dt) {
  if (!(dt > 0) || dt > Scalar(0.01)) throw std::invalid_argument("planner step: dt must lie in (0, 0.01]");
  if (!target.allFinite()) throw std::invalid_argument("planner step: non-finite target");

  PlannerState<Scalar> next = st;
  const Scalar w2 = pp.natural_frequency * pp.natural_frequency;
  const Scalar mu = pp.viscosity();

  for (int i = 0; i < 3; ++i) {
    const Scalar err = target[i] - st.position[i];
    const Scalar limit = std::abs(st.accel_limit[i]);
    auto drive = [&](Scalar e) { return std::copysign(std::min(w2 * std::abs(e), limit), e); };

    const Phase before = st.phase[i].phase;
    next.phase[i] = update_phase(st.phase[i], err);
    auto& ph = next.phase[i];

    Scalar accel;
    if (ph.phase == Phase::kConvergence && ph.x_max != 0) {
      if (before == Phase::kDivergence) {
        next.switch_target[i] = target[i];
        next.switch_accel[i] = drive(ph.x_max);
      }
      // Error measured against the target captured at the switch.
      const Scalar frozen_err = next.switch_target[i] - st.position[i];
      accel = 2 * next.switch_accel[i] / ph.x_max * (frozen_err - ph.x_max / 2);
    } else {
      accel = err == 0 ? Scalar(0) : drive(err);
    }
    accel -= mu * st.velocity[i];

    Scalar v = st.velocity[i] + accel * dt;
    v = std::clamp(v, -st.speed_limit, st.speed_limit);
    next.acceleration[i] = accel;
    next.velocity[i] = v;
    next.position[i] = st.position[i] + v * dt;
  }
  return next;
}

}  // namespace fic
