#include "vdyn/integrator_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vdyn/csv.hpp"
#include "vdyn/errors.hpp"

namespace vdyn {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 as_vec(const PlanControl& a) { return {a.u_x, a.u_y, a.u_psi}; }
PlanControl as_control(const Vec3& v) { return {v[0], v[1], v[2]}; }

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

PlanState axpy(const PlanState& x, double h, const PlanState& d) {
  return {x.X + h * d.X,       x.Y + h * d.Y,       x.psi + h * d.psi,
          x.v_x + h * d.v_x,   x.v_y + h * d.v_y,   x.v_psi + h * d.v_psi};
}

// Nearest point of the ellipse cylinder (x/alpha)^2 + (y/beta)^2 <= 1.
Vec3 project_ellipse(const Vec3& p, double alpha, double beta) {
  const double a2 = alpha * alpha, b2 = beta * beta;
  if (p[0] * p[0] / a2 + p[1] * p[1] / b2 <= 1.0) return p;
  // Newton on the multiplier; g is convex and decreasing so lambda rises monotonically.
  double lambda = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double ex = alpha * p[0] / (a2 + lambda), ey = beta * p[1] / (b2 + lambda);
    const double g = ex * ex + ey * ey - 1.0;
    const double dg = -2.0 * (ex * ex / (a2 + lambda) + ey * ey / (b2 + lambda));
    const double step = g / dg;
    lambda -= step;
    if (std::fabs(step) <= 1e-15 * (1.0 + lambda)) break;
  }
  return {a2 * p[0] / (a2 + lambda), b2 * p[1] / (b2 + lambda), p[2]};
}

}  // namespace

PlanState f_2di(const PlanState& xi, const PlanControl& u) {
  const double c = std::cos(xi.psi), s = std::sin(xi.psi);
  return {xi.v_x * c - xi.v_y * s, xi.v_x * s + xi.v_y * c, xi.v_psi, u.u_x, u.u_y, u.u_psi};
}

PlanState step_2di(const PlanState& xi, const PlanControl& u, double dt) {
  const PlanState k1 = f_2di(xi, u);
  const PlanState k2 = f_2di(axpy(xi, 0.5 * dt, k1), u);
  const PlanState k3 = f_2di(axpy(xi, 0.5 * dt, k2), u);
  const PlanState k4 = f_2di(axpy(xi, dt, k3), u);
  PlanState out;
  out.X = xi.X + dt / 6.0 * (k1.X + 2.0 * k2.X + 2.0 * k3.X + k4.X);
  out.Y = xi.Y + dt / 6.0 * (k1.Y + 2.0 * k2.Y + 2.0 * k3.Y + k4.Y);
  out.psi = xi.psi + dt / 6.0 * (k1.psi + 2.0 * k2.psi + 2.0 * k3.psi + k4.psi);
  out.v_x = xi.v_x + dt * u.u_x;
  out.v_y = xi.v_y + dt * u.u_y;
  out.v_psi = xi.v_psi + dt * u.u_psi;
  return out;
}

PlanControl inertial_acceleration(const PlanState& xi, const PlanControl& u) {
  return {u.u_x - xi.v_psi * xi.v_y, u.u_y + xi.v_psi * xi.v_x, u.u_psi};
}

PlanControl control_for_acceleration(const PlanState& xi, const PlanControl& a) {
  return {a.u_x + xi.v_psi * xi.v_y, a.u_y - xi.v_psi * xi.v_x, a.u_psi};
}

std::string FeasibilityReport::violations() const {
  std::ostringstream out;
  auto item = [&](const std::string& name, double slack) {
    if (slack < 0.0) out << (out.tellp() > 0 ? "; " : "") << name << " exceeded by " << format_number(-slack);
  };
  item("ellipse", ellipse_slack);
  item("a_X lower bound", ax_min_slack);
  item("a_X upper bound", ax_max_slack);
  for (std::size_t r = 0; r < row_slack.size(); ++r) item("row " + std::to_string(r + 1), row_slack[r]);
  return out.str();
}

FeasibilityReport is_feasible(const EnvelopeModel& env, const PlanControl& a, double v_x,
                              double tol) {
  FeasibilityReport rep;
  const double ex = a.u_x / env.alpha, ey = a.u_y / env.beta;
  rep.ellipse_slack = 1.0 - (ex * ex + ey * ey);
  rep.ax_min_slack = a.u_x - env.ax_min(v_x);
  rep.ax_max_slack = env.ax_max(v_x) - a.u_x;
  const Vec3 v = as_vec(a);
  for (std::size_t r = 0; r < 6; ++r) rep.row_slack[r] = env.b[r] - dot3(env.A[r], v);

  rep.feasible = rep.ellipse_slack >= -tol && rep.ax_min_slack >= -tol && rep.ax_max_slack >= -tol;
  for (double s : rep.row_slack) rep.feasible = rep.feasible && s >= -tol;
  return rep;
}

double feasible_scale(const EnvelopeModel& env, const PlanControl& a, double v_x) {
  double t = 1.0;
  const double q = (a.u_x / env.alpha) * (a.u_x / env.alpha) + (a.u_y / env.beta) * (a.u_y / env.beta);
  if (q > 1.0) t = std::min(t, 1.0 / std::sqrt(q));
  if (a.u_x > 0.0) t = std::min(t, env.ax_max(v_x) / a.u_x);
  if (a.u_x < 0.0) t = std::min(t, env.ax_min(v_x) / a.u_x);
  const Vec3 v = as_vec(a);
  for (std::size_t r = 0; r < 6; ++r) {
    const double lhs = dot3(env.A[r], v);
    if (lhs > 0.0) t = std::min(t, env.b[r] / lhs);
  }
  return std::max(t, 0.0);
}

PlanControl retract_feasible(const EnvelopeModel& env, const PlanControl& a, double v_x) {
  double t = feasible_scale(env, a, v_x);
  if (t >= 1.0) return a;
  t *= 1.0 - 1e-12;  // stay on the closed side despite rounding
  return {t * a.u_x, t * a.u_y, t * a.u_psi};
}

PlanControl project_feasible(const EnvelopeModel& env, const PlanControl& a, double v_x,
                             double tol, int max_iter) {
  if (is_feasible(env, a, v_x).feasible) return a;
  const double lo = env.ax_min(v_x), hi = env.ax_max(v_x);

  constexpr std::size_t kSets = 8;  // ellipse, a_X box, six halfspaces
  auto project = [&](std::size_t k, const Vec3& p) -> Vec3 {
    if (k == 0) return project_ellipse(p, env.alpha, env.beta);
    if (k == 1) return {std::clamp(p[0], lo, hi), p[1], p[2]};
    const auto& n = env.A[k - 2];
    const double excess = dot3(n, p) - env.b[k - 2];
    if (excess <= 0.0) return p;
    const double s = excess / dot3(n, n);
    return {p[0] - s * n[0], p[1] - s * n[1], p[2] - s * n[2]};
  };

  Vec3 x = as_vec(a);
  std::array<Vec3, kSets> incr{};
  double change = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    change = 0.0;
    for (std::size_t k = 0; k < kSets; ++k) {
      const Vec3 y{x[0] + incr[k][0], x[1] + incr[k][1], x[2] + incr[k][2]};
      const Vec3 p = project(k, y);
      for (int i = 0; i < 3; ++i) {
        incr[k][i] = y[i] - p[i];
        change = std::max(change, std::fabs(p[i] - x[i]));
      }
      x = p;
    }
    if (change <= tol && is_feasible(env, as_control(x), v_x, 1e-6).feasible)
      return retract_feasible(env, as_control(x), v_x);
  }
  throw NumericError("feasible projection did not converge after " + std::to_string(max_iter) +
                     " sweeps (last change " + format_number(change) + ")");
}

double lateral_limit(const EnvelopeModel& env) {
  double lim = env.beta;
  for (std::size_t r = 0; r < 6; ++r) {
    const double c = std::fabs(env.A[r][1]);
    if (c > 0.0) lim = std::min(lim, env.b[r] / c);
  }
  return lim;
}

}  // namespace vdyn
