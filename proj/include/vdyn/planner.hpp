#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vdyn/bicycle.hpp"
#include "vdyn/envelope.hpp"
#include "vdyn/integrator_model.hpp"
#include "vdyn/track.hpp"

namespace vdyn {

struct PlannerWeights {
  double progress = 0.1;  // per metre short of the horizon goal
  double lateral = 0.3;
  double heading = 1.0;
  double lateral_velocity = 1.0;
  double bound = 30.0;
  double obstacle = 30.0;
  double speed = 3.0;
  double effort = 0.05;
  double smooth = 0.1;
  double excess = 1.0;
};

struct PlannerConfig {
  double horizon = 3.0;  // s
  double dt = 0.2;       // s
  double vehicle_margin = 1.0;   // clearance kept from the track edges (m)
  double obstacle_margin = 0.9;  // obstacle inflation, half the vehicle width (m)
  double lateral_fraction = 0.95;  // share of the lateral limit in the speed cap
  double braking_fraction = 0.8;   // share of the braking limit in the speed cap
  double goal_speed = 100.0;       // horizon goal distance per second (m/s)
  double max_violation = 1.0;      // bound/obstacle intrusion reported as failure (m)
  int max_iterations = 30;
  PlannerWeights weights{};

  // Number of horizon steps; throws ConfigError unless horizon/dt is integral.
  std::size_t steps() const;
};

struct PlanResult {
  std::vector<PlanControl> controls;   // applied controls; (accel, delta, 0) for the bicycle
  std::vector<PlanControl> decision;   // optimizer variables, reused as warm start
  std::vector<PlanState> predicted;    // N + 1 states starting at the current one
  double cost = 0.0;
  double violation = 0.0;  // largest bound or obstacle intrusion (m)
  int iterations = 0;
};

class PlanError : public std::runtime_error {
 public:
  PlanError(const std::string& what, PlanResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const PlanResult& best() const { return best_; }

 private:
  PlanResult best_;
};

// Speed cap along the track from the curvature and a braking limit.
class SpeedCap {
 public:
  SpeedCap(const Track& track, double lateral_accel, double braking_decel,
           double ceiling = 100.0, double spacing = 1.0);
  double operator()(double s) const;

 private:
  const Track* track_;
  double spacing_;
  std::vector<double> v_;
};

// Receding-horizon plan for the constrained double integrator. Decision
// variables are the inertial accelerations of each step, retracted onto the
// envelope during the rollout, so every returned control is feasible.
// Throws PlanError carrying the best plan when the intrusion exceeds the limit.
PlanResult plan_step(const PlanState& xi, const Track& track, std::span<const Obstacle> obstacles,
                     const EnvelopeModel& env, const PlannerConfig& cfg,
                     std::span<const PlanControl> warm_start = {});

// Same objective for the kinematic bicycle; decision variables are (accel, delta).
PlanResult plan_step_bicycle(const BicycleState& xi, const Track& track,
                             std::span<const Obstacle> obstacles, const BicycleParams& params,
                             const PlannerConfig& cfg,
                             std::span<const PlanControl> warm_start = {});

}  // namespace vdyn
