#include "vdyn/closed_loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "vdyn/csv.hpp"
#include "vdyn/errors.hpp"

namespace vdyn {

namespace {

constexpr double kCornerCurvature = 1e-3;

std::vector<PlanControl> shifted(const std::vector<PlanControl>& d) {
  if (d.empty()) return d;
  std::vector<PlanControl> out(d.begin() + 1, d.end());
  out.push_back(d.back());
  return out;
}

}  // namespace

std::string to_string(PlannerModel m) {
  return m == PlannerModel::kDoubleIntegrator ? "double_integrator" : "kinematic_bicycle";
}

PlanLog run_closed_loop(PlannerModel model, const Track& track, std::span<const Obstacle> obstacles,
                        const EnvelopeModel& env, const BicycleParams& bicycle,
                        const PlannerConfig& planner, const ClosedLoopConfig& cfg) {
  if (!(cfg.replan_period > 0.0) || cfg.plant_substeps < 1)
    throw ConfigError("replan period and plant substeps must be positive");
  PlanLog log;
  log.model = model;

  const Vec2 p0 = track.point_at(cfg.s0);
  const double h0 = track.heading_at(cfg.s0);
  PlanState x{p0.x, p0.y, h0, cfg.v0, 0.0, 0.0};
  BicycleState b{p0.x, p0.y, h0, cfg.v0};
  double delta = 0.0;

  std::vector<PlanControl> warm;
  PlanControl held{};
  auto proj = track.project(p0);
  double s_prev = proj.s, progress = 0.0;
  const double hsub = cfg.replan_period / cfg.plant_substeps;

  for (std::size_t tick = 0; tick < cfg.max_ticks; ++tick) {
    LogTick row;
    row.t = static_cast<double>(tick) * cfg.replan_period;
    row.state = model == PlannerModel::kDoubleIntegrator ? x : to_plan_state(b, delta, bicycle);
    row.lat_err = proj.lateral;
    row.progress = progress;

    PlanResult plan;
    const auto start = std::chrono::steady_clock::now();
    try {
      plan = model == PlannerModel::kDoubleIntegrator
                 ? plan_step(x, track, obstacles, env, planner, warm)
                 : plan_step_bicycle(b, track, obstacles, bicycle, planner, warm);
    } catch (const PlanError& e) {
      plan = e.best();
      row.plan_failed = true;
    }
    row.solve_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    PlanControl u;
    if (row.plan_failed || plan.controls.empty()) {
      ++log.failures;
      if (model == PlannerModel::kDoubleIntegrator) {
        const PlanControl a = project_feasible(env, inertial_acceleration(x, held), x.v_x);
        u = control_for_acceleration(x, a);
      } else {
        const BicycleControl c = clamp_bicycle_control({held.u_x, held.u_y}, b.v, bicycle);
        u = {c.accel, c.delta, 0.0};
      }
      warm = shifted(warm);
    } else {
      u = plan.controls.front();
      warm = shifted(plan.decision);
    }
    row.u = u;
    row.predicted = std::move(plan.predicted);
    held = u;
    log.ticks.push_back(std::move(row));

    for (int k = 0; k < cfg.plant_substeps; ++k) {
      if (model == PlannerModel::kDoubleIntegrator) {
        x = step_2di(x, u, hsub);
      } else {
        delta = u.u_y;
        b = kinematic_bicycle_step(b, {u.u_x, u.u_y}, bicycle, hsub);
      }
    }
    const Vec2 p = model == PlannerModel::kDoubleIntegrator ? Vec2{x.X, x.Y} : Vec2{b.X, b.Y};
    proj = track.project(p, proj.segment);
    double ds = proj.s - s_prev;
    if (track.closed()) ds = std::remainder(ds, track.length());
    progress += ds;
    s_prev = proj.s;

    const double goal = track.closed() ? track.length() : track.length() - cfg.s0 - 1e-6;
    if (progress >= goal) {
      log.lap_completed = true;
      if (cfg.stop_at_lap) {
        LogTick last;
        last.t = static_cast<double>(tick + 1) * cfg.replan_period;
        last.state = model == PlannerModel::kDoubleIntegrator ? x : to_plan_state(b, delta, bicycle);
        last.lat_err = proj.lateral;
        last.progress = progress;
        last.u = u;
        log.ticks.push_back(std::move(last));
        break;
      }
    }
  }
  return log;
}

Metrics metrics(const PlanLog& log, const Track& track, double grid) {
  if (log.ticks.empty()) throw ConfigError("metrics need a nonempty log");
  Metrics m;
  double sum_solve = 0.0, sum_sq = 0.0;
  std::size_t solves = 0;
  std::size_t hint = kNoHint;
  for (const LogTick& t : log.ticks) {
    const auto pr = track.project({t.state.X, t.state.Y}, hint);
    hint = pr.segment;
    sum_sq += pr.lateral * pr.lateral;
    m.max_lat_err = std::max(m.max_lat_err, std::fabs(pr.lateral));
    if (t.solve_s > 0.0) {
      sum_solve += t.solve_s;
      ++solves;
    }
  }
  m.rms_lat_err = std::sqrt(sum_sq / static_cast<double>(log.ticks.size()));
  m.avg_solve_s = solves > 0 ? sum_solve / static_cast<double>(solves) : 0.0;

  // Speed profile against arc length travelled, first pass only.
  const double s_start = track.project({log.ticks.front().state.X, log.ticks.front().state.Y}).s;
  const double reach = std::min(log.ticks.back().progress, track.length());
  m.min_corner_speed = std::numeric_limits<double>::infinity();
  std::size_t j = 0;
  for (double s = 0.0; s <= reach + 1e-9; s += grid) {
    while (j + 1 < log.ticks.size() && log.ticks[j + 1].progress < s) ++j;
    const LogTick& a = log.ticks[j];
    const LogTick& b = log.ticks[std::min(j + 1, log.ticks.size() - 1)];
    const double va = std::hypot(a.state.v_x, a.state.v_y);
    const double vb = std::hypot(b.state.v_x, b.state.v_y);
    const double span = b.progress - a.progress;
    const double t = span > 0.0 ? std::clamp((s - a.progress) / span, 0.0, 1.0) : 0.0;
    const double v = (1.0 - t) * va + t * vb;
    m.profile_s.push_back(s);
    m.profile_v.push_back(v);
    if (std::fabs(track.curvature_at(s_start + s)) > kCornerCurvature)
      m.min_corner_speed = std::min(m.min_corner_speed, v);
  }
  if (!std::isfinite(m.min_corner_speed)) m.min_corner_speed = 0.0;
  return m;
}

void write_plan_log_csv(std::ostream& out, const PlanLog& log) {
  out << "t,X,Y,psi,v_x,v_y,v_psi,u_x,u_y,u_psi,solve_ms,lat_err\n";
  for (const LogTick& t : log.ticks) {
    const double f[] = {t.t,       t.state.X, t.state.Y, t.state.psi, t.state.v_x,
                        t.state.v_y, t.state.v_psi, t.u.u_x, t.u.u_y, t.u.u_psi,
                        1e3 * t.solve_s, t.lat_err};
    for (std::size_t i = 0; i < std::size(f); ++i) out << (i ? "," : "") << format_number(f[i]);
    out << '\n';
  }
}

void write_plan_log_csv(const std::string& path, const PlanLog& log) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot open for writing");
  write_plan_log_csv(out, log);
}

}  // namespace vdyn
