#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fic/planner.hpp"

using Vec = Eigen::Vector3d;

const Vec kZero = Vec::Zero();
using fic::PlannerParams;

TEST(PlannerLimits, SpotCheck) {
  const PlannerParams<double> pp(2, 0.2);
  const auto st = fic::set_target(fic::make_planner(kZero, pp), pp, Vec(0.1, 0, 0), 0.2);
  EXPECT_NEAR(st.speed_cap, 0.319, 1e-12);
  EXPECT_NEAR(st.accel_limit.x(), 2 * 0.1 * (0.319 / 0.1) * (0.319 / 0.1), 1e-12);
  EXPECT_NEAR(st.accel_limit.x(), 2.0352, 1e-4);
  EXPECT_EQ(st.accel_limit.y(), 0.0);
  EXPECT_EQ(st.accel_limit.z(), 0.0);
}

TEST(PlannerLimits, LargeSpeedTakesDistanceBranch) {
  const PlannerParams<double> pp(2, 10);
  const auto slow = fic::set_target(fic::make_planner(kZero, pp), pp, Vec(0.1, 0, 0), 0.2);
  const auto fast = fic::set_target(fic::make_planner(kZero, pp), pp, Vec(0.1, 0, 0), 10.0);
  EXPECT_DOUBLE_EQ(fast.speed_cap, slow.speed_cap);
  EXPECT_DOUBLE_EQ(fast.accel_limit.x(), slow.accel_limit.x());
}

TEST(PlannerLimits, ZeroDistanceHolds) {
  const PlannerParams<double> pp(2, 0.2);
  const Vec p(0.3, -0.1, 0.2);
  auto st = fic::set_target(fic::make_planner(p, pp), pp, p, 0.2);
  EXPECT_EQ(st.accel_limit, kZero);
  EXPECT_EQ(st.speed_cap, 0.0);
  for (int k = 0; k < 1000; ++k) st = fic::step(st, pp, p, 1e-3);
  EXPECT_EQ(st.position, p);
  EXPECT_EQ(st.velocity, kZero);
  EXPECT_EQ(st.acceleration, kZero);
}

TEST(PlannerStep, RejectsBadInput) {
  const PlannerParams<double> pp(2, 0.2);
  const auto st = fic::make_planner(kZero, pp);
  EXPECT_THROW(fic::step(st, pp, kZero, 0.0), std::invalid_argument);
  EXPECT_THROW(fic::step(st, pp, kZero, 0.02), std::invalid_argument);
  EXPECT_THROW(fic::step(st, pp, Vec(NAN, 0, 0), 1e-3), std::invalid_argument);
  EXPECT_THROW(PlannerParams<double>(0, 0.2), std::invalid_argument);
}

TEST(PlannerStep, StepResponseRespectsLimitsAndSettles) {
  const PlannerParams<double> pp(2, 0.2);
  const Vec target(0.1, 0, 0);
  auto st = fic::set_target(fic::make_planner(kZero, pp), pp, target, 0.2);
  const double a_max = std::abs(st.accel_limit.x());
  bool converging = false;
  double onset = 0;
  for (int k = 0; k < 20000; ++k) {
    const auto next = fic::step(st, pp, target, 1e-3);
    ASSERT_LE(std::abs(next.velocity.x()), 0.2);
    if (next.phase[0].phase == fic::Phase::kDivergence)
      ASSERT_LE(std::abs(next.acceleration.x() + pp.viscosity() * st.velocity.x()), a_max);
    const double dist = (next.position - target).norm();
    if (!converging && next.phase[0].phase == fic::Phase::kConvergence) {
      converging = true;
      onset = dist;
    }
    if (converging) ASSERT_LE(dist, onset) << "k=" << k;
    st = next;
  }
  EXPECT_TRUE(converging);
  EXPECT_LT((st.position - target).norm(), 1e-3);
}

TEST(PlannerStep, TracksMovingCircle) {
  const PlannerParams<double> pp(4, 0.2);
  auto circle = [](double t) {
    const double w = 2 * std::numbers::pi / 5;
    return Vec(0.1 * std::cos(w * t), 0.1 * std::sin(w * t), 0);
  };
  auto st = fic::make_planner(circle(0), pp);
  double worst = 0;
  for (int k = 0; k < 20000; ++k) {
    const double t = k * 1e-3;
    st = fic::track_target(st, pp, circle(t), 0.2);
    st = fic::step(st, pp, circle(t), 1e-3);
    for (int i = 0; i < 3; ++i) ASSERT_LE(std::abs(st.velocity[i]), 0.2);
    if (t > 5) worst = std::max(worst, (st.position - circle(t + 1e-3)).norm());
  }
  EXPECT_LT(worst, 0.03);
}
