#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "fic/plant.hpp"

using Vec = Eigen::Vector3d;
using Eigen::VectorXd;

const Vec kZero = Vec::Zero();

namespace {

const fic::PlantModel<double> kArm = fic::TwoLinkArm<double>{};
const fic::PlantModel<double> kMass = fic::PointMass<double>{};

fic::Obstacle<double> floor_at_zero() {
  return {fic::HalfSpace<double>{kZero, Vec::UnitZ()}, 5000, 50};
}

}  // namespace

TEST(Kinematics, TwoLinkSpotValues) {
  EXPECT_TRUE(fic::forward_kinematics(kArm, VectorXd(Eigen::Vector2d(0, 0))).isApprox(Vec(0.8, 0, 0)));
  const Vec up = fic::forward_kinematics(kArm, VectorXd(Eigen::Vector2d(std::numbers::pi / 2, 0)));
  EXPECT_NEAR(up.x(), 0.0, 1e-15);
  EXPECT_NEAR(up.y(), 0.8, 1e-15);
}

TEST(Kinematics, PointMassIdentity) {
  const VectorXd q = Vec(0.1, 0.2, 0.3);
  EXPECT_EQ(fic::forward_kinematics(kMass, q), Vec(0.1, 0.2, 0.3));
  EXPECT_EQ(fic::jacobian(kMass, q), Eigen::Matrix3d::Identity());
}

TEST(Kinematics, OutstretchedArmIsSingular) {
  const auto J = fic::jacobian(kArm, VectorXd(Eigen::Vector2d(0.7, 0)));
  EXPECT_NEAR(J.topRows<2>().determinant(), 0.0, 1e-15);
  const auto Jb = fic::jacobian(kArm, VectorXd(Eigen::Vector2d(0.7, 0.9)));
  EXPECT_NEAR(Jb.topRows<2>().determinant(), 0.4 * 0.4 * std::sin(0.9), 1e-14);
}

TEST(Kinematics, JacobianMatchesCentralDifferences) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  const double h = 1e-6;
  for (int n = 0; n < 200; ++n) {
    const VectorXd q = Eigen::Vector2d(u(rng), u(rng));
    const auto J = fic::jacobian(kArm, q);
    Eigen::Matrix<double, 3, 2> fd;
    for (int j = 0; j < 2; ++j) {
      VectorXd qp = q, qm = q;
      qp[j] += h;
      qm[j] -= h;
      fd.col(j) = (fic::forward_kinematics(kArm, qp) - fic::forward_kinematics(kArm, qm)) / (2 * h);
    }
    EXPECT_LE((J - fd).norm(), 1e-6 * std::max(1.0, J.norm())) << q.transpose();
  }
}

TEST(Dynamics, GravityAtZero) {
  const auto t = fic::dynamics_terms(kArm, VectorXd(Eigen::Vector2d::Zero()), VectorXd(Eigen::Vector2d::Zero()));
  EXPECT_NEAR(t.gravity[0], 15.696, 1e-9);
  EXPECT_NEAR(t.gravity[1], 3.924, 1e-9);
}

TEST(Dynamics, CoriolisVanishesAtRest) {
  const auto t = fic::dynamics_terms(kArm, VectorXd(Eigen::Vector2d(0.4, -1.2)), VectorXd(Eigen::Vector2d::Zero()));
  EXPECT_EQ(t.coriolis, Eigen::Vector2d::Zero());
}

TEST(Dynamics, CoriolisMatrixReproducesVector) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int n = 0; n < 500; ++n) {
    const VectorXd q = Eigen::Vector2d(u(rng), u(rng));
    const VectorXd qd = Eigen::Vector2d(u(rng), u(rng));
    const auto t = fic::dynamics_terms(kArm, q, qd);
    ASSERT_LE((t.coriolis_matrix * qd - t.coriolis).norm(), 1e-12);
    // M_dot - 2C is skew-symmetric.
    const double h = 1e-6;
    const auto M = [&](double s) { return fic::dynamics_terms(kArm, VectorXd(q + s * qd), qd).mass; };
    const Eigen::MatrixXd N = (M(h) - M(-h)) / (2 * h) - 2 * t.coriolis_matrix;
    ASSERT_LE((N + N.transpose()).norm(), 1e-6);
  }
}

TEST(Dynamics, MassMatrixSymmetricPositiveDefinite) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  for (int n = 0; n < 500; ++n) {
    const VectorXd q = Eigen::Vector2d(u(rng), u(rng));
    const auto M = fic::dynamics_terms(kArm, q, VectorXd(Eigen::Vector2d::Zero())).mass;
    EXPECT_EQ(M(0, 1), M(1, 0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Contact, PenaltyLaw) {
  const std::vector<fic::Obstacle<double>> obs{floor_at_zero()};
  EXPECT_EQ(fic::contact_forces(Vec(0, 0, 0.01), kZero, obs), kZero);
  EXPECT_TRUE(fic::contact_forces(Vec(0, 0, -0.001), kZero, obs).isApprox(Vec(0, 0, 5)));
  EXPECT_TRUE(fic::contact_forces(Vec(0, 0, -0.001), Vec(0, 0, -0.05), obs).isApprox(Vec(0, 0, 7.5)));
}

TEST(Contact, NeverPulls) {
  const std::vector<fic::Obstacle<double>> obs{
      floor_at_zero(), {fic::Box<double>{Vec(0.2, 0, 0), Vec(0.05, 0.05, 0.05)}, 5000, 50}};
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> x(-0.1, 0.3), v(-5, 5);
  for (int n = 0; n < 20000; ++n) {
    const Vec p(x(rng), x(rng) - 0.1, x(rng) - 0.1);
    const Vec f = fic::contact_forces(p, Vec(v(rng), v(rng), v(rng)), obs);
    const auto pen_floor = fic::penetration(std::get<fic::HalfSpace<double>>(obs[0].geometry), p);
    const auto pen_box = fic::penetration(std::get<fic::Box<double>>(obs[1].geometry), p);
    if (pen_floor.depth > 0 && pen_box.depth <= 0) ASSERT_GE(f.z(), 0.0);
    if (pen_floor.depth <= 0 && pen_box.depth > 0) ASSERT_GE(f.dot(pen_box.normal), 0.0);
    if (pen_floor.depth <= 0 && pen_box.depth <= 0) ASSERT_EQ(f, kZero);
  }
}

TEST(Bond, SpringAndBreak) {
  fic::BondState<double> b{true, kZero, 5000, 15};
  EXPECT_EQ(fic::bond_force(Vec(0.002, 0, 0), fic::BondState<double>{}).first, kZero);

  auto [f, next] = fic::bond_force(Vec(0.002, 0, 0), b);
  EXPECT_TRUE(f.isApprox(Vec(-10, 0, 0)));
  EXPECT_TRUE(next.attached);

  auto [f2, broken] = fic::bond_force(Vec(0.004, 0, 0), b);
  EXPECT_TRUE(f2.isApprox(Vec(-20, 0, 0)));
  EXPECT_FALSE(broken.attached);
  EXPECT_EQ(fic::bond_force(Vec(0.004, 0, 0), broken).first, kZero);
  EXPECT_EQ(fic::bond_force(Vec(0.0, 0, 0), broken).first, kZero);
}

TEST(Integration, PointMassConstantForce) {
  auto s = fic::make_plant_state(kMass, VectorXd(kZero));
  for (int k = 0; k < 1000; ++k) s = fic::step_dynamics(kMass, s, VectorXd(Vec(1, 0, 0)), kZero, 1e-3);
  EXPECT_NEAR(s.q_dot[0], 1.0, 1e-3);
  EXPECT_EQ(s.tick, 1000);
}

TEST(Integration, GravityCompensatedArmIsStationary) {
  const VectorXd q0 = Eigen::Vector2d(0.5, 0.8);
  auto s = fic::make_plant_state(kArm, q0);
  for (int k = 0; k < 2000; ++k) {
    const auto t = fic::dynamics_terms(kArm, s.q, s.q_dot);
    s = fic::step_dynamics(kArm, s, VectorXd(t.gravity), kZero, 1e-3);
  }
  EXPECT_LT((s.q - q0).norm(), 1e-12);
  EXPECT_LT(s.q_dot.norm(), 1e-12);
}

TEST(Integration, ZeroGravityEnergyDrift) {
  fic::TwoLinkArm<double> arm;
  arm.gravity = 0;
  const fic::PlantModel<double> model = arm;
  auto s = fic::make_plant_state(model, VectorXd(Eigen::Vector2d(0.3, 0.9)));
  s.q_dot = Eigen::Vector2d(1.5, -2.0);
  const double e0 = fic::mechanical_energy(model, s.q, s.q_dot);
  double worst = 0;
  for (int k = 0; k < 10000; ++k) {
    s = fic::step_dynamics(model, s, VectorXd(Eigen::Vector2d::Zero()), kZero, 1e-3);
    worst = std::max(worst, std::abs(fic::mechanical_energy(model, s.q, s.q_dot) - e0) / e0);
  }
  EXPECT_LT(worst, 0.01);
}

TEST(Integration, NonFiniteAbortsWithTick) {
  auto s = fic::make_plant_state(kMass, VectorXd(kZero));
  s.tick = 41;
  try {
    fic::step_dynamics(kMass, s, VectorXd(Vec(NAN, 0, 0)), kZero, 1e-3);
    FAIL() << "expected SimulationError";
  } catch (const fic::SimulationError& e) {
    EXPECT_EQ(e.tick(), 42);
  }
  EXPECT_THROW(fic::make_plant_state(kArm, VectorXd(kZero)), std::invalid_argument);
}

TEST(Integration, Deterministic) {
  auto run = [] {
    auto s = fic::make_plant_state(kArm, VectorXd(Eigen::Vector2d(0.1, 0.2)));
    for (int k = 0; k < 3000; ++k)
      s = fic::step_dynamics(kArm, s, VectorXd(Eigen::Vector2d(std::sin(k * 1e-3), 0.3)), Vec(0, 1, 0), 1e-3);
    return s;
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.q, b.q);
  EXPECT_EQ(a.q_dot, b.q_dot);
}
