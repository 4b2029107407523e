#pragma once

// Master-side haptic force law and teleoperation setpoint handling, and the
// replica-side task-space torque law.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "fic/fic_core.hpp"
#include "fic/plant.hpp"

namespace fic {

enum class TeleopMode { kOffset = 0, kVelocity = 1 };

/// Grasp-axis analogue input mapped to a haptic gain in [0, 1].
template <typename Scalar>
Scalar haptic_gain(Scalar raw) {
  if (std::isnan(raw)) return 0;
  return std::clamp(raw, Scalar(0), Scalar(1));
}

/// Haptic force on the master: FIC pull back to the local origin plus the
/// replica force scaled by the haptic gain.
template <typename Scalar>
Vec3<Scalar> master_force(const Vec3<Scalar>& x_master, const Vec3<Scalar>& replica_force, Scalar gain,
                          FicAttractor<Scalar, 3>& master_fic) {
  if (!x_master.allFinite() || !replica_force.allFinite() || !std::isfinite(gain))
    throw std::invalid_argument("master_force: non-finite input");
  if (gain < 0 || gain > 1) throw std::invalid_argument("master_force: haptic gain outside [0, 1]");
  return master_fic.force(-x_master) + gain * replica_force;
}

/// Teleoperation contribution to the replica setpoint for one master tick.
/// Offset mode maps the master offset directly, velocity mode integrates it
/// with `velocity_gain` (1/s).
template <typename Scalar>
Vec3<Scalar> teleop_setpoint(TeleopMode mode, const Vec3<Scalar>& x_master, const Vec3<Scalar>& prev, Scalar dt,
                             Scalar velocity_gain = 1) {
  if (!(dt > 0)) throw std::invalid_argument("teleop_setpoint: dt must be positive");
  if (mode == TeleopMode::kOffset) return x_master;
  return prev + velocity_gain * x_master * dt;
}

template <typename Scalar>
struct MasterState {
  Vec3<Scalar> x_master = Vec3<Scalar>::Zero();
  Scalar gain = 0;
  TeleopMode mode = TeleopMode::kOffset;
  Vec3<Scalar> x_prime_d = Vec3<Scalar>::Zero();
  // Offset-mode origin; moved on a velocity->offset switch so the setpoint
  // does not jump.
  Vec3<Scalar> origin = Vec3<Scalar>::Zero();
};

/// Advances the master for one tick, handling mode switches continuously.
template <typename Scalar>
MasterState<Scalar> update_master(const MasterState<Scalar>& s, const Vec3<Scalar>& x_master, TeleopMode mode,
                                  Scalar raw_gain, Scalar dt, Scalar velocity_gain = 1) {
  if (!x_master.allFinite()) throw std::invalid_argument("update_master: non-finite master position");
  MasterState<Scalar> next = s;
  next.x_master = x_master;
  next.gain = haptic_gain(raw_gain);
  if (mode != s.mode) {
    next.mode = mode;
    if (mode == TeleopMode::kOffset) next.origin = s.x_prime_d - x_master;
    // Switching into velocity mode keeps x_prime_d as the integration origin.
    return next;
  }
  if (mode == TeleopMode::kOffset)
    next.x_prime_d = s.origin + teleop_setpoint(mode, x_master, s.x_prime_d, dt, velocity_gain);
  else
    next.x_prime_d = teleop_setpoint(mode, x_master, s.x_prime_d, dt, velocity_gain);
  return next;
}

template <typename Scalar>
Vec3<Scalar> compose_setpoint(const Vec3<Scalar>& x_prime_d, const Vec3<Scalar>& x_dprime_d) {
  if (!x_prime_d.allFinite() || !x_dprime_d.allFinite())
    throw std::invalid_argument("compose_setpoint: non-finite input");
  return x_prime_d + x_dprime_d;
}

template <typename Scalar>
struct ReplicaCommand {
  VecX<Scalar> tau;
  Vec3<Scalar> task_force;  // FIC output handed to J^T
  Vec3<Scalar> error;       // x_d - x_R
};

/// tau = C + G + J^T FIC(x_d - x_R). No special handling at singularities.
template <typename Scalar>
ReplicaCommand<Scalar> replica_torque(const PlantModel<Scalar>& model, const VecX<Scalar>& q,
                                      const VecX<Scalar>& q_dot, const Vec3<Scalar>& x_d,
                                      FicAttractor<Scalar, 3>& replica_fic) {
  if (!x_d.allFinite()) throw std::invalid_argument("replica_torque: non-finite setpoint");
  ReplicaCommand<Scalar> out;
  out.error = x_d - forward_kinematics(model, q);
  out.task_force = replica_fic.force(out.error);
  const auto terms = dynamics_terms(model, q, q_dot);
  out.tau = terms.coriolis + terms.gravity + jacobian(model, q).transpose() * out.task_force;
  return out;
}

}  // namespace fic
