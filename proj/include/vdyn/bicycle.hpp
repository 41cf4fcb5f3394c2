#pragma once

#include "vdyn/integrator_model.hpp"
#include "vdyn/vehicle.hpp"

namespace vdyn {

struct BicycleParams {
  double l_f = 1.17;
  double l_r = 1.77;
  double accel_min = -9.3;  // m/s^2
  double accel_max = 4.3;
  double delta_max = 0.5235987755982988;  // 30 deg
  double lateral_limit = 0.5 * kGravity;  // planner validity bound, m/s^2

  double wheelbase() const { return l_f + l_r; }
};

BicycleParams bicycle_params(const VehicleParams& vehicle);

struct BicycleState {
  double X = 0.0;
  double Y = 0.0;
  double psi = 0.0;
  double v = 0.0;
};

struct BicycleControl {
  double accel = 0.0;
  double delta = 0.0;
};

// Side-slip angle at the center of mass.
double slip_angle(double delta, const BicycleParams& p);

// One RK4 step of the kinematic bicycle with the control held constant.
BicycleState kinematic_bicycle_step(const BicycleState& s, const BicycleControl& u,
                                    const BicycleParams& p, double dt);

// Steady lateral acceleration v^2 sin(beta) / l_r.
double bicycle_lateral_acceleration(double v, double delta, const BicycleParams& p);

// Accel clamped to its box; steering clamped to delta_max and to the lateral limit at speed v.
BicycleControl clamp_bicycle_control(const BicycleControl& u, double v, const BicycleParams& p);

// Same motion expressed in the double-integrator state (body-frame v_x, v_y, v_psi).
PlanState to_plan_state(const BicycleState& s, double delta, const BicycleParams& p);

}  // namespace vdyn
