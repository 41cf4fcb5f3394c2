#include "vdyn/bicycle.hpp"

#include <algorithm>
#include <cmath>

namespace vdyn {

namespace {

struct Deriv {
  double X, Y, psi, v;
};

Deriv bicycle_rhs(const BicycleState& s, const BicycleControl& u, const BicycleParams& p) {
  const double beta = slip_angle(u.delta, p);
  return {s.v * std::cos(s.psi + beta), s.v * std::sin(s.psi + beta),
          s.v * std::sin(beta) / p.l_r, u.accel};
}

BicycleState advance(const BicycleState& s, double h, const Deriv& d) {
  return {s.X + h * d.X, s.Y + h * d.Y, s.psi + h * d.psi, s.v + h * d.v};
}

}  // namespace

BicycleParams bicycle_params(const VehicleParams& vehicle) {
  BicycleParams p;
  p.l_f = vehicle.l_f;
  p.l_r = vehicle.l_r;
  p.delta_max = vehicle.delta_max;
  p.lateral_limit = 0.5 * vehicle.mu * kGravity;
  return p;
}

double slip_angle(double delta, const BicycleParams& p) {
  return std::atan(p.l_r / p.wheelbase() * std::tan(delta));
}

BicycleState kinematic_bicycle_step(const BicycleState& s, const BicycleControl& u,
                                    const BicycleParams& p, double dt) {
  const Deriv k1 = bicycle_rhs(s, u, p);
  const Deriv k2 = bicycle_rhs(advance(s, 0.5 * dt, k1), u, p);
  const Deriv k3 = bicycle_rhs(advance(s, 0.5 * dt, k2), u, p);
  const Deriv k4 = bicycle_rhs(advance(s, dt, k3), u, p);
  return {s.X + dt / 6.0 * (k1.X + 2.0 * k2.X + 2.0 * k3.X + k4.X),
          s.Y + dt / 6.0 * (k1.Y + 2.0 * k2.Y + 2.0 * k3.Y + k4.Y),
          s.psi + dt / 6.0 * (k1.psi + 2.0 * k2.psi + 2.0 * k3.psi + k4.psi),
          s.v + dt * u.accel};
}

double bicycle_lateral_acceleration(double v, double delta, const BicycleParams& p) {
  return v * v * std::sin(slip_angle(delta, p)) / p.l_r;
}

BicycleControl clamp_bicycle_control(const BicycleControl& u, double v, const BicycleParams& p) {
  double dmax = p.delta_max;
  const double v2 = v * v;
  if (v2 > 0.0) {
    const double sin_beta = p.lateral_limit * p.l_r / v2;
    if (sin_beta < 1.0) {
      const double beta = std::asin(sin_beta);
      dmax = std::min(dmax, std::atan(p.wheelbase() / p.l_r * std::tan(beta)));
    }
  }
  return {std::clamp(u.accel, p.accel_min, p.accel_max), std::clamp(u.delta, -dmax, dmax)};
}

PlanState to_plan_state(const BicycleState& s, double delta, const BicycleParams& p) {
  const double beta = slip_angle(delta, p);
  return {s.X, s.Y, s.psi, s.v * std::cos(beta), s.v * std::sin(beta),
          s.v * std::sin(beta) / p.l_r};
}

}  // namespace vdyn
