#include "vdyn/planner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "vdyn/errors.hpp"

namespace vdyn {

namespace {

struct Rollout {
  std::vector<PlanControl> controls;
  std::vector<PlanState> states;
  std::vector<PlanControl> excess;  // decision minus its admissible image
};

using RolloutFn = std::function<Rollout(const Eigen::VectorXd&)>;

PlanControl var(const Eigen::VectorXd& z, std::size_t k) {
  return {z(3 * k), z(3 * k + 1), z(3 * k + 2)};
}

double course(const PlanState& x) {
  if (std::hypot(x.v_x, x.v_y) < 0.1) return x.psi;
  return x.psi + std::atan2(x.v_y, x.v_x);
}

class Objective {
 public:
  Objective(const Track& track, std::span<const Obstacle> obstacles, const PlannerConfig& cfg,
            const SpeedCap& cap, std::array<double, 3> scale, bool penalize_vy)
      : track_(track), obstacles_(obstacles), cfg_(cfg), cap_(cap), scale_(scale),
        penalize_vy_(penalize_vy) {}

  Eigen::VectorXd residuals(const Eigen::VectorXd& z, const Rollout& r,
                            double* violation = nullptr) const {
    const auto& w = cfg_.weights;
    const std::size_t n = r.controls.size();
    std::vector<double> out;
    out.reserve(n * (9 + obstacles_.size()) + 1);
    double viol = 0.0;

    auto proj = track_.project({r.states[0].X, r.states[0].Y});
    const double s0 = proj.s;
    double s_prev = s0, s_unwrapped = s0;
    for (std::size_t k = 1; k <= n; ++k) {
      const PlanState& x = r.states[k];
      proj = track_.project({x.X, x.Y}, proj.segment);
      double ds = proj.s - s_prev;
      if (track_.closed()) ds = std::remainder(ds, track_.length());
      s_unwrapped += ds;
      s_prev = proj.s;

      out.push_back(w.lateral * proj.lateral);
      out.push_back(w.heading * wrap_angle(course(x) - proj.heading));
      if (penalize_vy_) out.push_back(w.lateral_velocity * x.v_y);
      const double bound = std::max(0.0, std::fabs(proj.lateral) -
                                             (track_.half_width() - cfg_.vehicle_margin));
      out.push_back(w.bound * bound);
      viol = std::max(viol, bound);
      for (const Obstacle& o : obstacles_) {
        const double pen = std::max(0.0, o.radius + cfg_.obstacle_margin -
                                             norm(Vec2{x.X, x.Y} - o.center));
        out.push_back(w.obstacle * pen);
        viol = std::max(viol, pen);
      }
      out.push_back(w.speed * std::max(0.0, std::hypot(x.v_x, x.v_y) - cap_(proj.s)));
    }
    for (std::size_t k = 0; k < n; ++k) {
      const PlanControl u = var(z, k);
      const PlanControl e = r.excess[k];
      const double c[3] = {u.u_x, u.u_y, u.u_psi};
      const double ex[3] = {e.u_x, e.u_y, e.u_psi};
      for (int i = 0; i < 3; ++i) {
        out.push_back(w.effort * c[i] / scale_[i]);
        out.push_back(w.excess * ex[i] / scale_[i]);
        if (k > 0) out.push_back(w.smooth * (z(3 * k + i) - z(3 * (k - 1) + i)) / scale_[i]);
      }
    }
    if (n > 0) out.push_back(w.progress * (s0 + cfg_.goal_speed * cfg_.horizon - s_unwrapped));
    if (violation != nullptr) *violation = viol;
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
  }

  const std::array<double, 3>& scale() const { return scale_; }

 private:
  const Track& track_;
  std::span<const Obstacle> obstacles_;
  const PlannerConfig& cfg_;
  const SpeedCap& cap_;
  std::array<double, 3> scale_;
  bool penalize_vy_;
};

// Levenberg-Marquardt with a forward-difference Jacobian.
PlanResult optimize(const RolloutFn& rollout, const Objective& obj, Eigen::VectorXd z,
                    const PlannerConfig& cfg) {
  const Eigen::Index nz = z.size();
  PlanResult res;
  Rollout r = rollout(z);
  Eigen::VectorXd f = obj.residuals(z, r);
  double cost = 0.5 * f.squaredNorm();
  double lambda = -1.0;

  int it = 0;
  for (; it < cfg.max_iterations && nz > 0; ++it) {
    Eigen::MatrixXd J(f.size(), nz);
    for (Eigen::Index j = 0; j < nz; ++j) {
      const double h = 1e-6 * obj.scale()[static_cast<std::size_t>(j % 3)] * (1.0 + std::fabs(z(j)));
      Eigen::VectorXd zp = z;
      zp(j) += h;
      J.col(j) = (obj.residuals(zp, rollout(zp)) - f) / h;
    }
    const Eigen::MatrixXd H = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * f;
    if (lambda < 0.0) lambda = 1e-3 * std::max(H.diagonal().maxCoeff(), 1e-12);

    bool accepted = false;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::MatrixXd A = H;
      A.diagonal() += lambda * (H.diagonal().array() + 1e-9).matrix();
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      const Eigen::VectorXd zn = z + step;
      Rollout rn = rollout(zn);
      Eigen::VectorXd fn = obj.residuals(zn, rn);
      const double cn = 0.5 * fn.squaredNorm();
      if (std::isfinite(cn) && cn < cost) {
        const double gain = cost - cn;
        z = zn;
        r = std::move(rn);
        f = std::move(fn);
        cost = cn;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (gain <= 1e-9 * (1.0 + cost)) it = cfg.max_iterations;
        break;
      }
      lambda *= 5.0;
    }
    if (!accepted) break;
  }

  obj.residuals(z, r, &res.violation);
  res.cost = cost;
  res.iterations = std::min(it, cfg.max_iterations);
  res.controls = r.controls;
  res.predicted = r.states;
  for (Eigen::Index k = 0; k < nz / 3; ++k) res.decision.push_back(var(z, static_cast<std::size_t>(k)));
  return res;
}

Eigen::VectorXd warm_vector(std::span<const PlanControl> warm, std::size_t n) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * n));
  for (std::size_t k = 0; k < n && !warm.empty(); ++k) {
    const PlanControl& u = warm[std::min(k, warm.size() - 1)];
    z(3 * k) = u.u_x;
    z(3 * k + 1) = u.u_y;
    z(3 * k + 2) = u.u_psi;
  }
  return z;
}

PlanResult finish(PlanResult res, const PlannerConfig& cfg) {
  if (res.violation > cfg.max_violation)
    throw PlanError("plan intrudes " + std::to_string(res.violation) +
                        " m into track bounds or obstacles",
                    std::move(res));
  return res;
}

}  // namespace

std::size_t PlannerConfig::steps() const {
  if (!(dt > 0.0) || !(horizon >= 0.0)) throw ConfigError("planner horizon and dt must be positive");
  const double n = horizon / dt;
  const double r = std::round(n);
  if (std::fabs(n - r) > 1e-9 * std::max(1.0, n))
    throw ConfigError("planner horizon must be an integer number of steps");
  return static_cast<std::size_t>(r);
}

SpeedCap::SpeedCap(const Track& track, double lateral_accel, double braking_decel,
                   double ceiling, double spacing)
    : track_(&track), spacing_(spacing) {
  const auto n = static_cast<std::size_t>(std::ceil(track.length() / spacing)) + 1;
  v_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double kappa = std::fabs(track.curvature_at(static_cast<double>(i) * spacing));
    v_[i] = kappa > 1e-9 ? std::min(ceiling, std::sqrt(lateral_accel / kappa)) : ceiling;
  }
  // Backward braking pass; closed tracks wrap around once more.
  const int passes = track.closed() ? 2 : 1;
  for (int p = 0; p < passes; ++p) {
    if (track.closed()) v_[n - 1] = std::min(v_[n - 1], v_[0]);
    for (std::size_t i = n - 1; i-- > 0;)
      v_[i] = std::min(v_[i], std::sqrt(v_[i + 1] * v_[i + 1] + 2.0 * braking_decel * spacing));
    if (track.closed()) v_[n - 1] = std::min(v_[n - 1], v_[0]);
  }
}

double SpeedCap::operator()(double s) const {
  const double x = track_->wrap(s) / spacing_;
  const auto i = std::min(static_cast<std::size_t>(x), v_.size() - 2);
  const double t = std::clamp(x - static_cast<double>(i), 0.0, 1.0);
  return (1.0 - t) * v_[i] + t * v_[i + 1];
}

PlanResult plan_step(const PlanState& xi, const Track& track, std::span<const Obstacle> obstacles,
                     const EnvelopeModel& env, const PlannerConfig& cfg,
                     std::span<const PlanControl> warm_start) {
  const std::size_t n = cfg.steps();
  double braking = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 50; ++k)
    braking = std::min(braking, -env.ax_min(env.v_min + (env.v_max - env.v_min) * k / 50.0));
  const SpeedCap cap(track, cfg.lateral_fraction * lateral_limit(env), cfg.braking_fraction * braking);
  const Objective obj(track, obstacles, cfg, cap,
                      {env.alpha, env.beta, std::max({env.b[2], env.b[4], 1.0})}, true);

  const RolloutFn rollout = [&](const Eigen::VectorXd& z) {
    Rollout r;
    r.states.push_back(xi);
    for (std::size_t k = 0; k < n; ++k) {
      const PlanState& x = r.states.back();
      const PlanControl raw = var(z, k);
      const PlanControl a = retract_feasible(env, raw, x.v_x);
      r.excess.push_back({raw.u_x - a.u_x, raw.u_y - a.u_y, raw.u_psi - a.u_psi});
      const PlanControl u = control_for_acceleration(x, a);
      r.controls.push_back(u);
      r.states.push_back(step_2di(x, u, cfg.dt));
    }
    return r;
  };
  return finish(optimize(rollout, obj, warm_vector(warm_start, n), cfg), cfg);
}

PlanResult plan_step_bicycle(const BicycleState& xi, const Track& track,
                             std::span<const Obstacle> obstacles, const BicycleParams& params,
                             const PlannerConfig& cfg, std::span<const PlanControl> warm_start) {
  const std::size_t n = cfg.steps();
  const SpeedCap cap(track, cfg.lateral_fraction * params.lateral_limit,
                     cfg.braking_fraction * -params.accel_min);
  const Objective obj(track, obstacles, cfg, cap,
                      {-params.accel_min, params.delta_max, 1.0}, false);

  const RolloutFn rollout = [&](const Eigen::VectorXd& z) {
    Rollout r;
    BicycleState s = xi;
    r.states.push_back(to_plan_state(s, 0.0, params));
    for (std::size_t k = 0; k < n; ++k) {
      const PlanControl raw = var(z, k);
      const BicycleControl u = clamp_bicycle_control({raw.u_x, raw.u_y}, s.v, params);
      r.excess.push_back({raw.u_x - u.accel, raw.u_y - u.delta, raw.u_psi});
      r.controls.push_back({u.accel, u.delta, 0.0});
      s = kinematic_bicycle_step(s, u, params, cfg.dt);
      r.states.push_back(to_plan_state(s, u.delta, params));
    }
    return r;
  };
  return finish(optimize(rollout, obj, warm_vector(warm_start, n), cfg), cfg);
}

}  // namespace vdyn
