#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vdyn/planner.hpp"

namespace vdyn {

enum class PlannerModel { kDoubleIntegrator, kKinematicBicycle };

std::string to_string(PlannerModel m);

struct ClosedLoopConfig {
  std::size_t max_ticks = 1000;
  double replan_period = 0.2;  // s
  double v0 = 0.0;             // initial speed along the track heading (m/s)
  double s0 = 0.0;             // initial arc length
  int plant_substeps = 10;
  bool stop_at_lap = true;
};

struct LogTick {
  double t = 0.0;
  PlanState state;
  PlanControl u;        // applied control
  double solve_s = 0.0; // planner wall time
  double lat_err = 0.0;
  double progress = 0.0;  // arc length travelled since the start
  bool plan_failed = false;
  std::vector<PlanState> predicted;
};

struct PlanLog {
  PlannerModel model = PlannerModel::kDoubleIntegrator;
  std::vector<LogTick> ticks;
  bool lap_completed = false;
  std::size_t failures = 0;
};

// Receding-horizon loop: plan, apply the first control for one replan period
// on a plant of the same model, repeat until the tick budget or a full lap
// (end of track when open). A planner failure holds the previous control,
// re-projected onto the envelope for the double integrator.
PlanLog run_closed_loop(PlannerModel model, const Track& track, std::span<const Obstacle> obstacles,
                        const EnvelopeModel& env, const BicycleParams& bicycle,
                        const PlannerConfig& planner, const ClosedLoopConfig& cfg);

struct Metrics {
  double avg_solve_s = 0.0;
  double rms_lat_err = 0.0;
  double max_lat_err = 0.0;
  std::vector<double> profile_s;  // uniform arc-length grid from the start
  std::vector<double> profile_v;
  double min_corner_speed = 0.0;  // slowest profile point where the track curves
};

// Lateral errors are recomputed from the logged positions.
Metrics metrics(const PlanLog& log, const Track& track, double grid = 5.0);

void write_plan_log_csv(std::ostream& out, const PlanLog& log);
void write_plan_log_csv(const std::string& path, const PlanLog& log);

}  // namespace vdyn
