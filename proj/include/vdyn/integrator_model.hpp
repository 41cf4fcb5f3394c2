#pragma once

#include <array>
#include <string>

#include "vdyn/envelope.hpp"

namespace vdyn {

struct PlanState {
  double X = 0.0;
  double Y = 0.0;
  double psi = 0.0;
  double v_x = 0.0;  // body frame
  double v_y = 0.0;
  double v_psi = 0.0;
};

struct PlanControl {
  double u_x = 0.0;
  double u_y = 0.0;
  double u_psi = 0.0;
};

// Time derivative of the constrained double integrator, returned in the
// layout of PlanState (X_dot, Y_dot, psi_dot, v_x_dot, v_y_dot, v_psi_dot).
PlanState f_2di(const PlanState& xi, const PlanControl& u);

// One RK4 step with u held constant. Velocities are advanced in closed form.
PlanState step_2di(const PlanState& xi, const PlanControl& u, double dt);

// Body-frame acceleration of the center of mass produced by u, including the
// rotation of the body-frame velocity: (u_x - v_psi v_y, u_y + v_psi v_x, u_psi).
PlanControl inertial_acceleration(const PlanState& xi, const PlanControl& u);

// Control that produces a given inertial acceleration at state xi.
PlanControl control_for_acceleration(const PlanState& xi, const PlanControl& a);

struct FeasibilityReport {
  bool feasible = false;
  double ellipse_slack = 0.0;  // 1 - (a_X/alpha)^2 - (a_Y/beta)^2
  double ax_min_slack = 0.0;   // a_X - a_X^min(v_x)
  double ax_max_slack = 0.0;   // a_X^max(v_x) - a_X
  std::array<double, 6> row_slack{};  // b - A a

  // Human-readable list of violated constraints, empty when feasible.
  std::string violations() const;
};

// Closed constraint set: slacks >= -tol count as satisfied.
FeasibilityReport is_feasible(const EnvelopeModel& env, const PlanControl& a, double v_x,
                              double tol = 0.0);

// Euclidean projection onto the constraint set by Dykstra's alternating
// projections. Feasible inputs are returned unchanged. Throws NumericError
// when the iteration cap is reached.
PlanControl project_feasible(const EnvelopeModel& env, const PlanControl& a, double v_x,
                             double tol = 1e-8, int max_iter = 20000);

// Largest t in [0, 1] with t * a feasible (the set is star-shaped about 0).
double feasible_scale(const EnvelopeModel& env, const PlanControl& a, double v_x);

// a scaled towards the origin onto the constraint set.
PlanControl retract_feasible(const EnvelopeModel& env, const PlanControl& a, double v_x);

// Largest |a_Y| allowed with a_X = a_psi = 0 (steady cornering limit).
double lateral_limit(const EnvelopeModel& env);

}  // namespace vdyn
