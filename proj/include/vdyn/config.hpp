#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vdyn/closed_loop.hpp"
#include "vdyn/envelope.hpp"
#include "vdyn/sampler.hpp"
#include "vdyn/vehicle.hpp"

namespace vdyn {

// "key = value" lines; '#' starts a comment. Keys may repeat only when read
// with list(). Errors carry "file:line" and the key.
class KeyValues {
 public:
  static KeyValues parse(std::istream& in, const std::string& name);
  static KeyValues load(const std::string& path);

  bool has(const std::string& key) const;
  double number(const std::string& key, double fallback);
  std::uint64_t integer(const std::string& key, std::uint64_t fallback);
  bool flag(const std::string& key, bool fallback);
  std::string text(const std::string& key, const std::string& fallback);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);
  // Every occurrence of a repeatable key, as comma-separated numbers.
  std::vector<std::vector<double>> list(const std::string& key);

  // Throws ConfigError naming the first key that was never read.
  void finish() const;
  const std::string& name() const { return name_; }

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  const Entry* single(const std::string& key);
  std::string where(const Entry& e, const std::string& key) const;

  std::string name_;
  std::multimap<std::string, Entry> entries_;
  std::set<std::string> used_;
};

VehicleParams load_vehicle(KeyValues& kv);
VehicleParams load_vehicle(const std::string& path);
SamplingConfig load_sampling(KeyValues& kv);
SamplingConfig load_sampling(const std::string& path);
FitConfig load_fit(KeyValues& kv);
FitConfig load_fit(const std::string& path);

struct PlannerSetup {
  PlannerConfig planner{};
  ClosedLoopConfig loop{};
  std::string track = "reference";  // "reference", "circle:<R>", "straight:<L>" or a CSV path
  double half_width = 6.0;          // for generated tracks
  std::vector<Obstacle> obstacles;
  std::string envelope;             // JSON path; empty selects the reference constants
};

PlannerSetup load_planner(KeyValues& kv);
PlannerSetup load_planner(const std::string& path);

// Builds the track named by setup.track; relative CSV paths resolve against base_dir.
Track make_track(const PlannerSetup& setup, const std::string& base_dir);

struct RunConfig {
  std::string vehicle;   // paths, resolved relative to the run file
  std::string sampling;
  std::string fit;
  std::string planner;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
};

RunConfig load_run(const std::string& path);

}  // namespace vdyn
