#pragma once

#include <array>
#include <vector>

#include "vdyn/tire.hpp"
#include "vdyn/vehicle.hpp"

namespace vdyn {

// Below this speed (m/s) both r_w*omega and V_xw count as standstill and the
// slip ratio is defined as zero.
inline constexpr double kStandstillSpeed = 1e-3;
// Slip-angle denominators are kept at least this far from zero (m/s).
inline constexpr double kMinSlipDenominator = 0.1;
// Brake torque fades as tanh(omega / kBrakeFadeOmega) so braking cannot spin
// a wheel backwards (rad/s).
inline constexpr double kBrakeFadeOmega = 1.0;

// Longitudinal slip ratio, clamped to [-1, 1].
double slip_ratio(double omega, double v_xw, double r_w);

std::array<double, 4> slip_angles(const BodyState& state, double delta,
                                  const VehicleParams& params);

// Wheel loads from the lever-rule static split plus suspension spring and
// damper forces. Travel is zeta_i = s_i l_w theta + c_i phi with s = +1 on the
// left, -1 on the right, c = -L/2 at the front and +L/2 at the rear
// (L = l_f + l_r). Loads are clamped at zero when a wheel lifts.
std::array<double, 4> normal_forces(double theta, double phi, double theta_dot,
                                    double phi_dot, const VehicleParams& params);

// Full intermediate quantities of one derivative evaluation.
struct WheelQuantities {
  std::array<double, 4> tau{};
  std::array<double, 4> alpha{};
  std::array<double, 4> F_z{};
  std::array<TireForce, 4> wheel_force{};
  std::array<double, 4> F_x{};  // vehicle frame
  std::array<double, 4> F_y{};
};

WheelQuantities wheel_quantities(const BodyState& state, const Control& u,
                                 const VehicleParams& params);

// Time derivative of the state; the returned BodyState holds rates
// (X holds dX/dt, psi holds dpsi/dt, psi_dot holds d2psi/dt2, ...).
// Throws NumericError on a non-finite intermediate.
BodyState derivatives(const BodyState& state, const Control& u,
                      const VehicleParams& params);

BodyState rk4_step(const BodyState& state, const Control& u, double dt,
                   const VehicleParams& params);

// Returns floor(T/dt) + 1 states, the first being state0.
std::vector<BodyState> simulate(const BodyState& state0, const Control& u,
                                double T, double dt,
                                const VehicleParams& params);

// Straight-line state with all wheels rolling without slip.
BodyState rolling_state(double v_x0, double v_y0, const VehicleParams& params,
                        double psi0 = 0.0);

}  // namespace vdyn
