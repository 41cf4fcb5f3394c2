#include "vdyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vdyn/errors.hpp"

namespace vdyn {

namespace {

constexpr std::array<double, 4> kSide = {1.0, -1.0, 1.0, -1.0};
constexpr std::array<bool, 4> kFront = {true, true, false, false};
constexpr const char* kWheelName[4] = {"front-left", "front-right", "rear-left",
                                       "rear-right"};

double saturate_denominator(double den) {
  if (den >= 0.0) return std::max(den, kMinSlipDenominator);
  return std::min(den, -kMinSlipDenominator);
}

// Wheel centre position in the body frame.
double wheel_x(int i, const VehicleParams& p) { return kFront[i] ? p.l_f : -p.l_r; }
double wheel_y(int i, const VehicleParams& p) { return kSide[i] * p.l_w; }

void require_finite(double v, int wheel, const char* what) {
  if (!std::isfinite(v)) {
    std::string msg = std::string("non-finite ") + what;
    if (wheel >= 0) msg += std::string(" at wheel ") + kWheelName[wheel];
    throw NumericError(msg);
  }
}

}  // namespace

std::array<double, BodyState::kSize> BodyState::to_array() const {
  return {X,     Y,   psi, theta,   phi,       V_x,     V_y,
          psi_dot, theta_dot, phi_dot, omega[0], omega[1], omega[2], omega[3]};
}

BodyState BodyState::from_array(const std::array<double, kSize>& v) {
  BodyState s;
  s.X = v[0];
  s.Y = v[1];
  s.psi = v[2];
  s.theta = v[3];
  s.phi = v[4];
  s.V_x = v[5];
  s.V_y = v[6];
  s.psi_dot = v[7];
  s.theta_dot = v[8];
  s.phi_dot = v[9];
  s.omega = {v[10], v[11], v[12], v[13]};
  return s;
}

void validate(const VehicleParams& p) {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string(key) + " must be strictly positive");
    }
  };
  positive(p.M_T, "M_T");
  positive(p.I_x, "I_x");
  positive(p.I_y, "I_y");
  positive(p.I_z, "I_z");
  positive(p.I_r, "I_r");
  positive(p.l_f, "l_f");
  positive(p.l_r, "l_r");
  positive(p.l_w, "l_w");
  positive(p.r_w, "r_w");
  positive(p.k_s, "k_s");
  positive(p.h, "h");
  positive(p.delta_max, "delta_max");
  if (!(p.d_s >= 0.0)) throw ConfigError("d_s must be non-negative");
  if (!(p.c_drag >= 0.0)) throw ConfigError("c_drag must be non-negative");
  if (!(p.mu > 0.0 && p.mu <= 2.0)) throw ConfigError("mu must lie in (0, 2]");
  if (!(p.T_min < 0.0 && p.T_max > 0.0)) {
    throw ConfigError("torque bounds must satisfy T_min < 0 < T_max");
  }
}

bool is_admissible(const Control& u, const VehicleParams& p) {
  return u.T_f >= p.T_min && u.T_f <= p.T_max && u.T_r >= p.T_min &&
         u.T_r <= 0.0 && std::abs(u.delta) <= p.delta_max;
}

double slip_ratio(double omega, double v_xw, double r_w) {
  const double v_wheel = r_w * omega;
  if (std::abs(v_wheel) < kStandstillSpeed && std::abs(v_xw) < kStandstillSpeed) {
    return 0.0;
  }
  double den = v_wheel >= v_xw ? v_wheel : v_xw;
  if (std::abs(den) < kStandstillSpeed) {
    den = std::copysign(kStandstillSpeed, den);
  }
  return std::clamp((v_wheel - v_xw) / den, -1.0, 1.0);
}

std::array<double, 4> slip_angles(const BodyState& s, double delta,
                                  const VehicleParams& p) {
  std::array<double, 4> alpha{};
  for (int i = 0; i < 4; ++i) {
    // V_x -/+ l_w psi_dot for left/right, V_y + l_f psi_dot or V_y - l_r psi_dot
    const double num = s.V_y + wheel_x(i, p) * s.psi_dot;
    const double den = saturate_denominator(s.V_x - wheel_y(i, p) * s.psi_dot);
    alpha[i] = (kFront[i] ? delta : 0.0) - std::atan(num / den);
  }
  return alpha;
}

std::array<double, 4> normal_forces(double theta, double phi, double theta_dot,
                                    double phi_dot, const VehicleParams& p) {
  const double L = p.wheelbase();
  const double weight = p.M_T * kGravity;
  const double front_static = 0.5 * weight * p.l_r / L;
  const double rear_static = 0.5 * weight * p.l_f / L;
  std::array<double, 4> F_z{};
  for (int i = 0; i < 4; ++i) {
    const double pitch_arm = kFront[i] ? -0.5 * L : 0.5 * L;
    const double zeta = kSide[i] * p.l_w * theta + pitch_arm * phi;
    const double zeta_dot = kSide[i] * p.l_w * theta_dot + pitch_arm * phi_dot;
    const double base = kFront[i] ? front_static : rear_static;
    F_z[i] = std::max(0.0, base - p.k_s * zeta - p.d_s * zeta_dot);
  }
  return F_z;
}

WheelQuantities wheel_quantities(const BodyState& s, const Control& u,
                                 const VehicleParams& p) {
  WheelQuantities q;
  q.F_z = normal_forces(s.theta, s.phi, s.theta_dot, s.phi_dot, p);
  q.alpha = slip_angles(s, u.delta, p);
  const double cos_d = std::cos(u.delta);
  const double sin_d = std::sin(u.delta);
  for (int i = 0; i < 4; ++i) {
    const double c = kFront[i] ? cos_d : 1.0;
    const double sn = kFront[i] ? sin_d : 0.0;
    const double v_cx = s.V_x - wheel_y(i, p) * s.psi_dot;
    const double v_cy = s.V_y + wheel_x(i, p) * s.psi_dot;
    const double v_xw = v_cx * c + v_cy * sn;
    q.tau[i] = slip_ratio(s.omega[i], v_xw, p.r_w);
    q.wheel_force[i] = tire_forces(q.tau[i], q.alpha[i], q.F_z[i], p.mu, p.tire);
    const TireForce& f = q.wheel_force[i];
    q.F_x[i] = f.F_xw * c - f.F_yw * sn;
    q.F_y[i] = f.F_xw * sn + f.F_yw * c;
    require_finite(q.F_x[i], i, "longitudinal tire force");
    require_finite(q.F_y[i], i, "lateral tire force");
  }
  return q;
}

BodyState derivatives(const BodyState& s, const Control& u,
                      const VehicleParams& p) {
  const WheelQuantities q = wheel_quantities(s, u, p);
  const auto& Fx = q.F_x;
  const auto& Fy = q.F_y;
  const auto& Fz = q.F_z;
  const double sum_fx = Fx[0] + Fx[1] + Fx[2] + Fx[3];
  const double sum_fy = Fy[0] + Fy[1] + Fy[2] + Fy[3];

  BodyState d;
  const double c = std::cos(s.psi);
  const double sn = std::sin(s.psi);
  d.X = s.V_x * c - s.V_y * sn;
  d.Y = s.V_x * sn + s.V_y * c;
  d.psi = s.psi_dot;
  d.theta = s.theta_dot;
  d.phi = s.phi_dot;
  const double drag = p.c_drag * s.V_x * std::abs(s.V_x);
  d.V_x = s.psi_dot * s.V_y + (sum_fx - drag) / p.M_T;
  d.V_y = -s.psi_dot * s.V_x + sum_fy / p.M_T;
  d.psi_dot = (p.l_f * (Fy[0] + Fy[1]) - p.l_r * (Fy[2] + Fy[3]) +
               p.l_w * (Fx[1] + Fx[3] - Fx[0] - Fx[2])) /
              p.I_z;
  d.theta_dot = (p.l_w * (Fz[0] + Fz[2] - Fz[1] - Fz[3]) + p.h * sum_fy) / p.I_x;
  d.phi_dot = (p.l_r * (Fz[2] + Fz[3]) - p.l_f * (Fz[0] + Fz[1]) - p.h * sum_fx) / p.I_y;
  for (int i = 0; i < 4; ++i) {
    double torque = kFront[i] ? u.T_f : u.T_r;
    if (torque < 0.0) torque *= std::tanh(s.omega[i] / kBrakeFadeOmega);
    d.omega[i] = (torque - p.r_w * q.wheel_force[i].F_xw) / p.I_r;
    require_finite(d.omega[i], i, "wheel spin acceleration");
  }
  require_finite(d.V_x, -1, "longitudinal acceleration");
  require_finite(d.V_y, -1, "lateral acceleration");
  require_finite(d.psi_dot, -1, "yaw acceleration");
  require_finite(d.theta_dot, -1, "roll acceleration");
  require_finite(d.phi_dot, -1, "pitch acceleration");
  return d;
}

namespace {

BodyState axpy(const BodyState& x, double a, const BodyState& d) {
  auto xv = x.to_array();
  const auto dv = d.to_array();
  for (std::size_t i = 0; i < xv.size(); ++i) xv[i] += a * dv[i];
  return BodyState::from_array(xv);
}

}  // namespace

BodyState rk4_step(const BodyState& s, const Control& u, double dt,
                   const VehicleParams& p) {
  const BodyState k1 = derivatives(s, u, p);
  const BodyState k2 = derivatives(axpy(s, 0.5 * dt, k1), u, p);
  const BodyState k3 = derivatives(axpy(s, 0.5 * dt, k2), u, p);
  const BodyState k4 = derivatives(axpy(s, dt, k3), u, p);
  auto xv = s.to_array();
  const auto a1 = k1.to_array();
  const auto a2 = k2.to_array();
  const auto a3 = k3.to_array();
  const auto a4 = k4.to_array();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    xv[i] += dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
  }
  return BodyState::from_array(xv);
}

std::vector<BodyState> simulate(const BodyState& state0, const Control& u,
                                double T, double dt, const VehicleParams& p) {
  if (!(dt > 0.0) || T < dt) {
    throw NumericError("simulate requires T >= dt > 0");
  }
  const auto steps = static_cast<std::size_t>(std::floor(T / dt + 1e-9));
  std::vector<BodyState> traj;
  traj.reserve(steps + 1);
  traj.push_back(state0);
  for (std::size_t k = 1; k <= steps; ++k) {
    try {
      traj.push_back(rk4_step(traj.back(), u, dt, p));
    } catch (const NumericError& e) {
      throw NumericError("step " + std::to_string(k) + ": " + e.what());
    }
  }
  return traj;
}

BodyState rolling_state(double v_x0, double v_y0, const VehicleParams& p,
                        double psi0) {
  BodyState s;
  s.psi = psi0;
  s.V_x = v_x0;
  s.V_y = v_y0;
  s.omega.fill(v_x0 / p.r_w);
  return s;
}

}  // namespace vdyn
