#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "vdyn/bicycle.hpp"
#include "vdyn/errors.hpp"
#include "vdyn/track.hpp"

using namespace vdyn;

TEST(Track, StraightGeometry) {
  const Track t = straight_track(100.0, 5.0);
  EXPECT_FALSE(t.closed());
  EXPECT_NEAR(t.length(), 100.0, 1e-12);
  const Vec2 p = t.point_at(40.0);
  EXPECT_NEAR(p.x, 40.0, 1e-12);
  EXPECT_NEAR(p.y, 0.0, 1e-12);
  EXPECT_NEAR(t.heading_at(40.0), 0.0, 1e-12);
  EXPECT_NEAR(t.curvature_at(40.0), 0.0, 1e-12);
}

TEST(Track, CircleGeometry) {
  const Track t = circular_track(50.0, 5.0);
  EXPECT_TRUE(t.closed());
  EXPECT_NEAR(t.length(), 2 * std::numbers::pi * 50.0, 0.05);
  EXPECT_NEAR(t.curvature_at(30.0), 1.0 / 50.0, 1e-3);
  const TrackProjection pr = t.project({0.0, 2.0});
  EXPECT_NEAR(pr.lateral, 2.0, 5e-3);
  // The chords lean towards the center, so the foot lies just past vertex 0.
  EXPECT_NEAR(std::min(pr.s, t.length() - pr.s), 0.0, 0.05);
}

TEST(Track, ProjectionSignAndHint) {
  const Track t = straight_track(100.0, 5.0);
  const TrackProjection left = t.project({30.0, 1.5});
  EXPECT_NEAR(left.s, 30.0, 1e-12);
  EXPECT_NEAR(left.lateral, 1.5, 1e-12);
  const TrackProjection right = t.project({30.0, -2.0}, left.segment);
  EXPECT_NEAR(right.lateral, -2.0, 1e-12);
  EXPECT_EQ(right.segment, left.segment);
  // Ends extend as rays on open tracks.
  EXPECT_NEAR(t.project({110.0, 0.5}).s, 110.0, 1e-9);
  EXPECT_NEAR(t.project({110.0, 0.5}).lateral, 0.5, 1e-9);
}

TEST(Track, HintedAndGlobalProjectionAgree) {
  const Track t = reference_circuit();
  for (double s = 0.0; s < t.length(); s += 7.3) {
    const Vec2 c = t.point_at(s);
    const double h = t.heading_at(s);
    const Vec2 p{c.x - 1.2 * std::sin(h), c.y + 1.2 * std::cos(h)};
    const TrackProjection g = t.project(p);
    const TrackProjection l = t.project(p, (g.segment + 3) % t.segments());
    EXPECT_NEAR(g.s, l.s, 1e-9);
    EXPECT_NEAR(g.lateral, l.lateral, 1e-9);
  }
}

TEST(Track, WrapClosedAndClampOpen) {
  const Track c = circular_track(20.0, 3.0);
  EXPECT_NEAR(c.wrap(c.length() + 1.0), 1.0, 1e-9);
  EXPECT_NEAR(c.wrap(-1.0), c.length() - 1.0, 1e-9);
  const Track s = straight_track(10.0, 3.0);
  EXPECT_EQ(s.wrap(12.0), 10.0);
  EXPECT_EQ(s.wrap(-2.0), 0.0);
}

TEST(Track, ReferenceCircuitLayout) {
  const Track t = reference_circuit();
  const double expected = 600.0 + 0.5 * std::numbers::pi * (30 + 50 + 30 + 50);
  EXPECT_NEAR(t.length(), expected, 1.0);
  EXPECT_NEAR(t.curvature_at(100.0), 0.0, 1e-9);
  EXPECT_NEAR(t.curvature_at(200.0 + 0.25 * std::numbers::pi * 30), 1.0 / 30.0, 2e-3);
  EXPECT_DOUBLE_EQ(t.half_width(), 6.0);
}

TEST(Track, InvalidInputThrows) {
  EXPECT_THROW(Track({{0, 0}}, 1.0, false), ConfigError);
  EXPECT_THROW(Track({{0, 0}, {1, 0}}, 0.0, false), ConfigError);
  EXPECT_THROW(Track({{0, 0}, {1, 0}, {1, 0}, {2, 0}}, 1.0, false), ConfigError);
  // Figure of eight.
  EXPECT_THROW(Track({{0, 0}, {2, 2}, {2, 0}, {0, 2}}, 0.5, false), ConfigError);
}

TEST(Track, CsvRoundTrip) {
  const Track t = reference_circuit(5.5, 2.0);
  std::stringstream ss;
  save_track(ss, t);
  const Track back = load_track(ss, "mem");
  EXPECT_EQ(back.closed(), t.closed());
  EXPECT_DOUBLE_EQ(back.half_width(), 5.5);
  ASSERT_EQ(back.points().size(), t.points().size());
  EXPECT_NEAR(back.length(), t.length(), 1e-6);  // 9 significant digits on disk
}

TEST(Track, CsvErrorsNameTheLine) {
  std::stringstream ss("# half_width=3 closed=0\ns,X,Y\n0,0,0\n1,abc,0\n");
  try {
    load_track(ss, "t.csv");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("t.csv:4"), std::string::npos) << e.what();
  }
}

TEST(WrapAngle, Range) {
  EXPECT_NEAR(wrap_angle(3 * std::numbers::pi / 2), -std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(wrap_angle(-7.0), -7.0 + 2 * std::numbers::pi, 1e-12);
}

TEST(Bicycle, ZeroSteeringGoesStraight) {
  const BicycleParams p;
  BicycleState s{0, 0, 0.3, 10};
  for (int i = 0; i < 50; ++i) s = kinematic_bicycle_step(s, {0.0, 0.0}, p, 0.1);
  EXPECT_NEAR(s.psi, 0.3, 1e-15);
  EXPECT_NEAR(s.X, 50 * std::cos(0.3), 1e-9);
  EXPECT_NEAR(s.Y, 50 * std::sin(0.3), 1e-9);
}

TEST(Bicycle, RestIsFixedPoint) {
  const BicycleParams p;
  const BicycleState s{1, 2, 0.5, 0};
  const BicycleState n = kinematic_bicycle_step(s, {0.0, 0.2}, p, 0.2);
  EXPECT_EQ(n.X, s.X);
  EXPECT_EQ(n.Y, s.Y);
  EXPECT_EQ(n.psi, s.psi);
  EXPECT_EQ(n.v, 0.0);
}

TEST(Bicycle, SteadyTurnRadius) {
  const BicycleParams p;
  const double delta = 0.1, v = 8.0;
  const double beta = std::atan(p.l_r / p.wheelbase() * std::tan(delta));
  EXPECT_NEAR(slip_angle(delta, p), beta, 1e-15);
  const double radius = p.l_r / std::sin(beta);
  EXPECT_NEAR(radius, p.wheelbase() / (std::tan(delta) * std::cos(beta)), 1e-9);
  BicycleState s{0, 0, 0, v};
  double max_d = 0.0, min_d = 1e9;
  // Center of the turn lies at distance R to the left of the velocity direction.
  const Vec2 c{-radius * std::sin(beta), radius * std::cos(beta)};
  for (int i = 0; i < 400; ++i) {
    s = kinematic_bicycle_step(s, {0.0, delta}, p, 0.05);
    const double d = std::hypot(s.X - c.x, s.Y - c.y);
    max_d = std::max(max_d, d);
    min_d = std::min(min_d, d);
  }
  EXPECT_NEAR(max_d, radius, 1e-6);
  EXPECT_NEAR(min_d, radius, 1e-6);
  EXPECT_NEAR(bicycle_lateral_acceleration(v, delta, p), v * v / radius, 1e-9);
}

TEST(Bicycle, ClampRespectsLateralLimit) {
  const BicycleParams p = bicycle_params(VehicleParams{});
  EXPECT_NEAR(p.lateral_limit, 0.5 * kGravity, 1e-12);
  const BicycleControl c = clamp_bicycle_control({20.0, 0.5}, 25.0, p);
  EXPECT_EQ(c.accel, p.accel_max);
  EXPECT_LE(bicycle_lateral_acceleration(25.0, c.delta, p), p.lateral_limit + 1e-9);
  const BicycleControl slow = clamp_bicycle_control({-20.0, -0.4}, 1.0, p);
  EXPECT_EQ(slow.accel, p.accel_min);
  EXPECT_NEAR(slow.delta, -0.4, 1e-12);
  EXPECT_NEAR(clamp_bicycle_control({0.0, 1.0}, 0.0, p).delta, p.delta_max, 1e-12);
}

TEST(Bicycle, PlanStateMapping) {
  const BicycleParams p;
  const PlanState x = to_plan_state({1, 2, 0.3, 10}, 0.2, p);
  const double b = slip_angle(0.2, p);
  EXPECT_NEAR(x.v_x, 10 * std::cos(b), 1e-12);
  EXPECT_NEAR(x.v_y, 10 * std::sin(b), 1e-12);
  EXPECT_NEAR(x.v_psi, 10 * std::sin(b) / p.l_r, 1e-12);
}
