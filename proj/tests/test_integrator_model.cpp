#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vdyn/errors.hpp"
#include "vdyn/integrator_model.hpp"

using namespace vdyn;

TEST(F2di, StraightAhead) {
  const PlanState d = f_2di({0, 0, 0, 5, 0, 0}, {});
  EXPECT_DOUBLE_EQ(d.X, 5.0);
  EXPECT_DOUBLE_EQ(d.Y, 0.0);
}

TEST(F2di, RotatedHeading) {
  const PlanState d = f_2di({0, 0, std::numbers::pi / 2, 3, 1, 0}, {});
  EXPECT_NEAR(d.X, -1.0, 1e-15);
  EXPECT_NEAR(d.Y, 3.0, 1e-15);
}

TEST(F2di, ControlPassThrough) {
  const PlanState d = f_2di({1, 2, 0.3, 4, 5, 0.7}, {1, 2, 3});
  EXPECT_DOUBLE_EQ(d.psi, 0.7);
  EXPECT_DOUBLE_EQ(d.v_x, 1.0);
  EXPECT_DOUBLE_EQ(d.v_y, 2.0);
  EXPECT_DOUBLE_EQ(d.v_psi, 3.0);
}

TEST(Step2di, ZeroControlKeepsVelocities) {
  const PlanState xi{1, 2, 0.8, 7, 0, 0};
  const PlanState n = step_2di(xi, {}, 0.2);
  EXPECT_EQ(n.v_x, 7.0);
  EXPECT_EQ(n.v_y, 0.0);
  EXPECT_EQ(n.v_psi, 0.0);
  EXPECT_NEAR(n.X, 1.0 + 1.4 * std::cos(0.8), 1e-12);
  EXPECT_NEAR(n.Y, 2.0 + 1.4 * std::sin(0.8), 1e-12);
}

TEST(Step2di, ConstantAccelerationKinematics) {
  const PlanState n = step_2di({}, {1, 0, 0}, 1.0);
  EXPECT_NEAR(n.v_x, 1.0, 1e-15);
  EXPECT_NEAR(n.X, 0.5, 1e-15);
}

TEST(Step2di, VelocitiesMatchClosedForm) {
  const PlanState xi{0, 0, 0.1, 3, -1, 0.2};
  const PlanControl u{0.7, -0.4, 0.3};
  const double dt = 0.37;
  const PlanState n = step_2di(xi, u, dt);
  EXPECT_NEAR(n.v_x, 3 + 0.7 * dt, 1e-15);
  EXPECT_NEAR(n.v_y, -1 - 0.4 * dt, 1e-15);
  EXPECT_NEAR(n.v_psi, 0.2 + 0.3 * dt, 1e-15);
  EXPECT_NEAR(n.psi, 0.1 + 0.2 * dt + 0.5 * 0.3 * dt * dt, 1e-15);
}

TEST(Step2di, HalfStepCompositionIsFourthOrder) {
  // Error of one step against two half steps shrinks ~ dt^5 per step.
  const PlanState xi{0, 0, 0, 10, 1, 0.5};
  const PlanControl u{1, 0.5, 0.8};
  auto gap = [&](double dt) {
    const PlanState one = step_2di(xi, u, dt);
    const PlanState two = step_2di(step_2di(xi, u, dt / 2), u, dt / 2);
    return std::hypot(one.X - two.X, one.Y - two.Y);
  };
  const double e1 = gap(0.4), e2 = gap(0.2);
  EXPECT_GT(std::log2(e1 / e2), 4.5);
  EXPECT_LT(gap(0.2), 0.2 * 0.2 * 0.2 * 0.2);
}

TEST(InertialAcceleration, RoundTrip) {
  const PlanState xi{0, 0, 0, 12, 0.5, 0.4};
  const PlanControl a{1.0, 2.0, 0.3};
  const PlanControl u = control_for_acceleration(xi, a);
  const PlanControl back = inertial_acceleration(xi, u);
  EXPECT_NEAR(back.u_x, a.u_x, 1e-14);
  EXPECT_NEAR(back.u_y, a.u_y, 1e-14);
  EXPECT_NEAR(back.u_psi, a.u_psi, 1e-14);
  // Steady turn: zero body-frame change still needs centripetal acceleration.
  EXPECT_NEAR(inertial_acceleration(xi, {}).u_y, 0.4 * 12, 1e-14);
}

TEST(IsFeasible, Origin) {
  const auto r = is_feasible(reference_envelope(), {0, 0, 0}, 20.0);
  EXPECT_TRUE(r.feasible);
  EXPECT_TRUE(r.violations().empty());
}

TEST(IsFeasible, LongitudinalUpperBound) {
  const auto r = is_feasible(reference_envelope(), {4.22, 0, 0}, 20.0);
  EXPECT_FALSE(r.feasible);
  EXPECT_NEAR(r.ax_max_slack, 4.12 - 4.22, 1e-12);
  EXPECT_GE(r.ellipse_slack, 0.0);
  EXPECT_GE(r.ax_min_slack, 0.0);
  for (double s : r.row_slack) EXPECT_GE(s, 0.0);
  EXPECT_NE(r.violations().find("a_X upper bound"), std::string::npos);
}

TEST(IsFeasible, SlopedRowSix) {
  const auto r = is_feasible(reference_envelope(), {0, 9.0, 0}, 20.0);
  EXPECT_FALSE(r.feasible);
  EXPECT_NEAR(r.row_slack[5], 5.1 - 5.13, 1e-12);
  EXPECT_NEAR(r.row_slack[2], 0.0, 1e-12);
  EXPECT_NEAR(r.ellipse_slack, 0.0, 1e-12);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_GE(r.row_slack[i], -1e-12) << i;
  EXPECT_NE(r.violations().find("row 6"), std::string::npos);
}

TEST(IsFeasible, ClosedSetBoundary) {
  // On row 3 exactly with the other rows slack.
  const double ay = 9.9 / 1.1;
  const auto r = is_feasible(reference_envelope(), {0, 4.0, 9.9 - 1.1 * 4.0}, 20.0);
  EXPECT_NEAR(r.row_slack[2], 0.0, 1e-12);
  EXPECT_TRUE(is_feasible(reference_envelope(), {0, 4.0, 9.9 - 1.1 * 4.0}, 20.0, 1e-12).feasible);
  EXPECT_GT(ay, 4.0);
}

TEST(IsFeasible, ConvexCombinationsStayFeasible) {
  const EnvelopeModel env = reference_envelope();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ux(-10, 5), uy(-9, 9), up(-10, 10), ut(0, 1);
  std::vector<PlanControl> feas;
  while (feas.size() < 200) {
    const PlanControl a{ux(rng), uy(rng), up(rng)};
    if (is_feasible(env, a, 20.0).feasible) feas.push_back(a);
  }
  for (std::size_t i = 0; i + 1 < feas.size(); ++i) {
    const double t = ut(rng);
    const PlanControl& a = feas[i];
    const PlanControl& b = feas[i + 1];
    const PlanControl c{t * a.u_x + (1 - t) * b.u_x, t * a.u_y + (1 - t) * b.u_y,
                        t * a.u_psi + (1 - t) * b.u_psi};
    EXPECT_TRUE(is_feasible(env, c, 20.0, 1e-12).feasible);
  }
}

TEST(ProjectFeasible, FeasibleInputUnchanged) {
  const PlanControl a{1.0, -2.0, 0.5};
  const PlanControl p = project_feasible(reference_envelope(), a, 20.0);
  EXPECT_EQ(p.u_x, a.u_x);
  EXPECT_EQ(p.u_y, a.u_y);
  EXPECT_EQ(p.u_psi, a.u_psi);
}

TEST(ProjectFeasible, BoxBoundActive) {
  const PlanControl p = project_feasible(reference_envelope(), {100, 0, 0}, 20.0);
  EXPECT_NEAR(p.u_x, 4.12, 1e-6);
  EXPECT_NEAR(p.u_y, 0.0, 1e-6);
  EXPECT_NEAR(p.u_psi, 0.0, 1e-6);
}

TEST(ProjectFeasible, OutputIsFeasibleAndNearest) {
  const EnvelopeModel env = reference_envelope();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int k = 0; k < 200; ++k) {
    const PlanControl a{u(rng), u(rng), u(rng)};
    const PlanControl p = project_feasible(env, a, 20.0);
    ASSERT_TRUE(is_feasible(env, p, 20.0, 1e-6).feasible);
    // No radial retraction of a is closer than the projection.
    const double t = feasible_scale(env, a, 20.0);
    const double d_proj = std::hypot(a.u_x - p.u_x, a.u_y - p.u_y, a.u_psi - p.u_psi);
    const double d_ray = std::hypot(a.u_x * (1 - t), a.u_y * (1 - t), a.u_psi * (1 - t));
    EXPECT_LE(d_proj, d_ray + 1e-6);
  }
}

TEST(FeasibleScale, RetractionHitsBoundary) {
  const EnvelopeModel env = reference_envelope();
  EXPECT_DOUBLE_EQ(feasible_scale(env, {1, 1, 1}, 20.0), 1.0);
  const double t = feasible_scale(env, {100, 0, 0}, 20.0);
  EXPECT_NEAR(100 * t, 4.12, 1e-9);
  const PlanControl r = retract_feasible(env, {0, 50, 0}, 20.0);
  EXPECT_TRUE(is_feasible(env, r, 20.0).feasible);
  EXPECT_NEAR(r.u_y, lateral_limit(env), 1e-9);
}

TEST(LateralLimit, ReferenceEnvelope) {
  // Rows 5-6 bind first: 5.1 / 0.57.
  EXPECT_NEAR(lateral_limit(reference_envelope()), 5.1 / 0.57, 1e-12);
}
