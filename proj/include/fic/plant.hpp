#pragma once

// Simulated replica plants: a Cartesian point mass and a planar two-link arm
// moving in the vertical x-y plane, with penalty contacts and a breakable
// spring bond acting at the end effector.

#include <cmath>
#include <limits>
#include <type_traits>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fic/planner.hpp"

namespace fic {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using TaskJacobian = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

template <typename Scalar>
struct PointMass {
  Scalar mass = 1;
};

template <typename Scalar>
struct TwoLinkArm {
  Scalar m1 = 2, m2 = 2;
  Scalar l1 = Scalar(0.4), l2 = Scalar(0.4);
  Scalar lc1 = Scalar(0.2), lc2 = Scalar(0.2);
  Scalar i1 = Scalar(2.0 * 0.16 / 12.0), i2 = Scalar(2.0 * 0.16 / 12.0);  // uniform rods
  Scalar gravity = Scalar(9.81);
};

template <typename Scalar>
using PlantModel = std::variant<PointMass<Scalar>, TwoLinkArm<Scalar>>;

template <typename Scalar>
void validate(const PlantModel<Scalar>& model) {
  std::visit(
      [](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PointMass<Scalar>>) {
          if (!(m.mass > 0)) throw std::invalid_argument("PointMass: mass must be positive");
        } else {
          if (!(m.m1 > 0 && m.m2 > 0 && m.l1 > 0 && m.l2 > 0 && m.lc1 > 0 && m.lc2 > 0))
            throw std::invalid_argument("TwoLinkArm: masses and lengths must be positive");
          if (!(m.i1 >= 0 && m.i2 >= 0 && m.gravity >= 0))
            throw std::invalid_argument("TwoLinkArm: inertias and gravity must be non-negative");
        }
      },
      model);
}

template <typename Scalar>
int dof(const PlantModel<Scalar>& model) {
  return std::holds_alternative<PointMass<Scalar>>(model) ? 3 : 2;
}

template <typename Scalar>
struct DynamicsTerms {
  MatX<Scalar> mass;
  VecX<Scalar> coriolis;  // C(q, q_dot) as a joint-space vector
  VecX<Scalar> gravity;
  MatX<Scalar> coriolis_matrix;  // coriolis == coriolis_matrix * q_dot
};

// ---------------------------------------------------------------------------
// point mass

template <typename Scalar>
Vec3<Scalar> forward_kinematics(const PointMass<Scalar>&, const VecX<Scalar>& q) {
  return q.template head<3>();
}

template <typename Scalar>
TaskJacobian<Scalar> jacobian(const PointMass<Scalar>&, const VecX<Scalar>&) {
  return TaskJacobian<Scalar>::Identity(3, 3);
}

template <typename Scalar>
DynamicsTerms<Scalar> dynamics_terms(const PointMass<Scalar>& m, const VecX<Scalar>&, const VecX<Scalar>&) {
  return {m.mass * MatX<Scalar>::Identity(3, 3), VecX<Scalar>::Zero(3), VecX<Scalar>::Zero(3),
          MatX<Scalar>::Zero(3, 3)};
}

// ---------------------------------------------------------------------------
// two-link arm, joint angles measured from +x, gravity along -y

template <typename Scalar>
Vec3<Scalar> forward_kinematics(const TwoLinkArm<Scalar>& a, const VecX<Scalar>& q) {
  const Scalar q12 = q[0] + q[1];
  return {a.l1 * std::cos(q[0]) + a.l2 * std::cos(q12), a.l1 * std::sin(q[0]) + a.l2 * std::sin(q12), 0};
}

template <typename Scalar>
TaskJacobian<Scalar> jacobian(const TwoLinkArm<Scalar>& a, const VecX<Scalar>& q) {
  const Scalar s1 = std::sin(q[0]), c1 = std::cos(q[0]);
  const Scalar s12 = std::sin(q[0] + q[1]), c12 = std::cos(q[0] + q[1]);
  TaskJacobian<Scalar> J = TaskJacobian<Scalar>::Zero(3, 2);
  J(0, 0) = -a.l1 * s1 - a.l2 * s12;
  J(0, 1) = -a.l2 * s12;
  J(1, 0) = a.l1 * c1 + a.l2 * c12;
  J(1, 1) = a.l2 * c12;
  return J;
}

template <typename Scalar>
DynamicsTerms<Scalar> dynamics_terms(const TwoLinkArm<Scalar>& a, const VecX<Scalar>& q,
                                     const VecX<Scalar>& qd) {
  const Scalar c2 = std::cos(q[1]);
  const Scalar h = a.m2 * a.l1 * a.lc2 * std::sin(q[1]);

  DynamicsTerms<Scalar> out{MatX<Scalar>(2, 2), VecX<Scalar>(2), VecX<Scalar>(2), MatX<Scalar>(2, 2)};
  const Scalar m22 = a.i2 + a.m2 * a.lc2 * a.lc2;
  const Scalar m12 = m22 + a.m2 * a.l1 * a.lc2 * c2;
  const Scalar m11 = a.i1 + a.m1 * a.lc1 * a.lc1 + a.i2 +
                     a.m2 * (a.l1 * a.l1 + a.lc2 * a.lc2 + 2 * a.l1 * a.lc2 * c2);
  out.mass << m11, m12, m12, m22;

  out.coriolis << -h * (2 * qd[0] * qd[1] + qd[1] * qd[1]), h * qd[0] * qd[0];
  out.coriolis_matrix << -h * qd[1], -h * (qd[0] + qd[1]), h * qd[0], 0;

  const Scalar g2 = a.m2 * a.gravity * a.lc2 * std::cos(q[0] + q[1]);
  out.gravity << (a.m1 * a.lc1 + a.m2 * a.l1) * a.gravity * std::cos(q[0]) + g2, g2;
  return out;
}

// variant dispatch

template <typename Scalar>
Vec3<Scalar> forward_kinematics(const PlantModel<Scalar>& model, const VecX<Scalar>& q) {
  return std::visit([&](const auto& m) { return forward_kinematics(m, q); }, model);
}

template <typename Scalar>
TaskJacobian<Scalar> jacobian(const PlantModel<Scalar>& model, const VecX<Scalar>& q) {
  return std::visit([&](const auto& m) { return jacobian(m, q); }, model);
}

template <typename Scalar>
DynamicsTerms<Scalar> dynamics_terms(const PlantModel<Scalar>& model, const VecX<Scalar>& q,
                                     const VecX<Scalar>& qd) {
  return std::visit([&](const auto& m) { return dynamics_terms(m, q, qd); }, model);
}

/// Kinetic plus gravitational potential energy (J).
template <typename Scalar>
Scalar mechanical_energy(const PlantModel<Scalar>& model, const VecX<Scalar>& q, const VecX<Scalar>& qd) {
  const auto terms = dynamics_terms(model, q, qd);
  Scalar energy = qd.dot(terms.mass * qd) / 2;
  if (const auto* a = std::get_if<TwoLinkArm<Scalar>>(&model)) {
    const Scalar y1 = a->lc1 * std::sin(q[0]);
    const Scalar y2 = a->l1 * std::sin(q[0]) + a->lc2 * std::sin(q[0] + q[1]);
    energy += a->gravity * (a->m1 * y1 + a->m2 * y2);
  }
  return energy;
}

// ---------------------------------------------------------------------------
// environment

template <typename Scalar>
struct Box {
  Vec3<Scalar> center = Vec3<Scalar>::Zero();
  Vec3<Scalar> half_extents = Vec3<Scalar>::Constant(Scalar(0.01));
};

/// Solid region {x : (x - point) . normal < 0}; normal points out of the solid.
template <typename Scalar>
struct HalfSpace {
  Vec3<Scalar> point = Vec3<Scalar>::Zero();
  Vec3<Scalar> normal = Vec3<Scalar>::UnitZ();
};

template <typename Scalar>
struct Obstacle {
  std::variant<Box<Scalar>, HalfSpace<Scalar>> geometry;
  Scalar stiffness = 5000;  // k_c
  Scalar damping = 50;      // d_c
};

template <typename Scalar>
struct Penetration {
  Scalar depth = 0;
  Vec3<Scalar> normal = Vec3<Scalar>::Zero();
};

template <typename Scalar>
Penetration<Scalar> penetration(const Box<Scalar>& box, const Vec3<Scalar>& x) {
  const Vec3<Scalar> rel = x - box.center;
  Penetration<Scalar> out;
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (int i = 0; i < 3; ++i) {
    const Scalar depth = box.half_extents[i] - std::abs(rel[i]);
    if (depth <= 0) return {};
    if (depth < best) {
      best = depth;
      out.normal = Vec3<Scalar>::Zero();
      out.normal[i] = rel[i] >= 0 ? Scalar(1) : Scalar(-1);
    }
  }
  out.depth = best;
  return out;
}

template <typename Scalar>
Penetration<Scalar> penetration(const HalfSpace<Scalar>& hs, const Vec3<Scalar>& x) {
  const Vec3<Scalar> n = hs.normal.normalized();
  const Scalar depth = -(x - hs.point).dot(n);
  if (depth <= 0) return {};
  return {depth, n};
}

/// Summed penalty force of all obstacles on a point at x moving at x_dot.
/// Each contact pushes along its outward normal only, never pulls.
template <typename Scalar>
Vec3<Scalar> contact_forces(const Vec3<Scalar>& x, const Vec3<Scalar>& x_dot,
                            const std::vector<Obstacle<Scalar>>& obstacles) {
  Vec3<Scalar> total = Vec3<Scalar>::Zero();
  for (const auto& ob : obstacles) {
    const auto pen = std::visit([&](const auto& g) { return penetration(g, x); }, ob.geometry);
    if (pen.depth <= 0) continue;
    const Scalar approach = -x_dot.dot(pen.normal);
    const Scalar push = ob.stiffness * pen.depth + ob.damping * approach;
    if (push > 0) total += push * pen.normal;
  }
  return total;
}

template <typename Scalar>
struct BondState {
  bool attached = false;
  Vec3<Scalar> anchor = Vec3<Scalar>::Zero();
  Scalar stiffness = 5000;  // k_v
  Scalar break_force = 15;
};

/// Spring force of the bond on the end effector. A bond loaded beyond its
/// break force reports that force for this tick and comes back detached.
template <typename Scalar>
std::pair<Vec3<Scalar>, BondState<Scalar>> bond_force(const Vec3<Scalar>& x, const BondState<Scalar>& bond) {
  if (!bond.attached) return {Vec3<Scalar>::Zero(), bond};
  const Vec3<Scalar> f = bond.stiffness * (bond.anchor - x);
  BondState<Scalar> next = bond;
  if (f.norm() > bond.break_force) next.attached = false;
  return {f, next};
}

// ---------------------------------------------------------------------------
// integration

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, long tick) : std::runtime_error(what), tick_(tick) {}
  long tick() const { return tick_; }

 private:
  long tick_;
};

template <typename Scalar>
struct PlantState {
  VecX<Scalar> q;
  VecX<Scalar> q_dot;
  Scalar t = 0;
  long tick = 0;
  BondState<Scalar> bond;
};

template <typename Scalar>
PlantState<Scalar> make_plant_state(const PlantModel<Scalar>& model, const VecX<Scalar>& q0) {
  if (q0.size() != dof(model)) throw std::invalid_argument("initial configuration has wrong dimension");
  return {q0, VecX<Scalar>::Zero(q0.size()), 0, 0, {}};
}

/// End-effector velocity J(q) q_dot.
template <typename Scalar>
Vec3<Scalar> task_velocity(const PlantModel<Scalar>& model, const PlantState<Scalar>& s) {
  return jacobian(model, s.q) * s.q_dot;
}

/// Semi-implicit Euler step of M q_ddot = tau + J^T f_ext - C - G, with the
/// velocity update implicit in the Coriolis matrix.
/// Throws SimulationError (with the tick index) if the state goes non-finite.
template <typename Scalar>
PlantState<Scalar> step_dynamics(const PlantModel<Scalar>& model, const PlantState<Scalar>& s,
                                 const VecX<Scalar>& tau, const Vec3<Scalar>& f_ext, Scalar dt) {
  if (!(dt > 0) || dt > Scalar(0.01)) throw std::invalid_argument("step_dynamics: dt must lie in (0, 0.01]");
  const auto terms = dynamics_terms(model, s.q, s.q_dot);
  const TaskJacobian<Scalar> J = jacobian(model, s.q);
  const VecX<Scalar> rhs = terms.mass * s.q_dot + dt * (tau + J.transpose() * f_ext - terms.gravity);
  const MatX<Scalar> lhs = terms.mass + dt * terms.coriolis_matrix;

  PlantState<Scalar> next = s;
  next.q_dot = lhs.partialPivLu().solve(rhs);
  next.q = s.q + next.q_dot * dt;
  next.tick = s.tick + 1;
  next.t = static_cast<Scalar>(next.tick) * dt;
  if (!next.q.allFinite() || !next.q_dot.allFinite())
    throw SimulationError("plant state became non-finite at tick " + std::to_string(next.tick), next.tick);
  return next;
}

}  // namespace fic
