#pragma once

#include <array>
#include <numbers>

namespace vdyn {

inline constexpr double kGravity = 9.81;

// Combined-slip Magic Formula coefficients.
//
// Pure-slip curves use F = D sin(C atan(B s - E (B s - atan(B s)))) with
// D = mu * F_z. The slip stiffness per unit load (k_x, k_y) is held fixed, so
// B = k / (C mu): lowering mu narrows the peak as well as scaling it.
// Interaction weights follow the cosine family:
//   G_xa = cos(C_xa atan(B_xa alpha)),  B_xa = r_bx1 cos(atan(r_bx2 tau))
//   G_yk = cos(C_yk atan(B_yk tau)),    B_yk = r_by1 cos(atan(r_by2 alpha))
struct TireParams {
  double C_x = 1.65;
  double k_x = 20.0;
  double E_x = 0.0;
  double C_y = 1.3;
  double k_y = 14.0;
  double E_y = -0.3;
  double r_bx1 = 13.0;
  double r_bx2 = 9.7;
  double C_xa = 1.1;
  double r_by1 = 10.6;
  double r_by2 = 7.8;
  double C_yk = 1.05;
};

// Physical constants of the 9-DOF body model, SI units. Defaults describe a
// front-wheel-drive berline (1820 kg, l_f = 1.17 m, l_r = 1.77 m, l_w = 0.81 m).
struct VehicleParams {
  double M_T = 1820.0;
  double I_x = 600.0;
  double I_y = 2800.0;
  double I_z = 3500.0;
  double I_r = 0.9;
  double l_f = 1.17;
  double l_r = 1.77;
  double l_w = 0.81;
  double r_w = 0.3;
  double k_s = 40000.0;
  double d_s = 4000.0;
  double h = 0.55;
  double c_drag = 0.4;
  double mu = 1.0;
  TireParams tire{};
  double T_min = -1500.0;
  double T_max = 1250.0;
  double delta_max = std::numbers::pi / 6.0;

  double wheelbase() const { return l_f + l_r; }
};

// Throws ConfigError naming the first violated constraint.
void validate(const VehicleParams& params);

// Wheels are indexed 0 = front-left, 1 = front-right, 2 = rear-left,
// 3 = rear-right.
struct BodyState {
  double X = 0.0;
  double Y = 0.0;
  double psi = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  double V_x = 0.0;
  double V_y = 0.0;
  double psi_dot = 0.0;
  double theta_dot = 0.0;
  double phi_dot = 0.0;
  std::array<double, 4> omega{};

  static constexpr std::size_t kSize = 14;
  std::array<double, kSize> to_array() const;
  static BodyState from_array(const std::array<double, kSize>& v);
};

// Per-front-wheel torque, per-rear-wheel torque, front steering angle.
struct Control {
  double T_f = 0.0;
  double T_r = 0.0;
  double delta = 0.0;
};

bool is_admissible(const Control& u, const VehicleParams& params);

}  // namespace vdyn
