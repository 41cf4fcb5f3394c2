#include "vdyn/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>

#include "vdyn/csv.hpp"
#include "vdyn/errors.hpp"

namespace vdyn {

namespace fs = std::filesystem;

KeyValues KeyValues::parse(std::istream& in, const std::string& name) {
  KeyValues kv;
  kv.name_ = name;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(name + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
    kv.entries_.emplace(key, Entry{value, lineno});
  }
  return kv;
}

KeyValues KeyValues::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  return parse(in, path);
}

bool KeyValues::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValues::where(const Entry& e, const std::string& key) const {
  return name_ + ":" + std::to_string(e.line) + ": key '" + key + "'";
}

const KeyValues::Entry* KeyValues::single(const std::string& key) {
  used_.insert(key);
  const auto [lo, hi] = entries_.equal_range(key);
  if (lo == hi) return nullptr;
  if (std::next(lo) != hi) throw ConfigError(where(std::next(lo)->second, key) + " given twice");
  return &lo->second;
}

double KeyValues::number(const std::string& key, double fallback) {
  const Entry* e = single(key);
  return e ? parse_number(e->value, where(*e, key)) : fallback;
}

std::uint64_t KeyValues::integer(const std::string& key, std::uint64_t fallback) {
  const Entry* e = single(key);
  if (!e) return fallback;
  std::uint64_t v = 0;
  const char* end = e->value.data() + e->value.size();
  const auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(where(*e, key) + ": expected a non-negative integer, got '" + e->value + "'");
  return v;
}

bool KeyValues::flag(const std::string& key, bool fallback) {
  const Entry* e = single(key);
  if (!e) return fallback;
  if (e->value == "1" || e->value == "true") return true;
  if (e->value == "0" || e->value == "false") return false;
  throw ConfigError(where(*e, key) + ": expected true/false, got '" + e->value + "'");
}

std::string KeyValues::text(const std::string& key, const std::string& fallback) {
  const Entry* e = single(key);
  return e ? e->value : fallback;
}

std::vector<double> KeyValues::numbers(const std::string& key, const std::vector<double>& fallback) {
  const Entry* e = single(key);
  if (!e) return fallback;
  std::vector<double> out;
  for (auto f : split(e->value, ',')) out.push_back(parse_number(trim(f), where(*e, key)));
  return out;
}

std::vector<std::vector<double>> KeyValues::list(const std::string& key) {
  used_.insert(key);
  std::vector<std::vector<double>> out;
  const auto [lo, hi] = entries_.equal_range(key);
  for (auto it = lo; it != hi; ++it) {
    std::vector<double> row;
    for (auto f : split(it->second.value, ','))
      row.push_back(parse_number(trim(f), where(it->second, key)));
    out.push_back(std::move(row));
  }
  return out;
}

void KeyValues::finish() const {
  for (const auto& [key, e] : entries_)
    if (!used_.count(key)) throw ConfigError(where(e, key) + " is not recognised");
}

namespace {

template <typename T, typename F>
T with_context(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(name, 0) == 0) throw;
    throw ConfigError(name + ": " + what);
  }
}

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace

VehicleParams load_vehicle(KeyValues& kv) {
  return with_context<VehicleParams>(kv.name(), [&] {
    VehicleParams p;
    p.M_T = kv.number("M_T", p.M_T);
    p.I_x = kv.number("I_x", p.I_x);
    p.I_y = kv.number("I_y", p.I_y);
    p.I_z = kv.number("I_z", p.I_z);
    p.I_r = kv.number("I_r", p.I_r);
    p.l_f = kv.number("l_f", p.l_f);
    p.l_r = kv.number("l_r", p.l_r);
    p.l_w = kv.number("l_w", p.l_w);
    p.r_w = kv.number("r_w", p.r_w);
    p.k_s = kv.number("k_s", p.k_s);
    p.d_s = kv.number("d_s", p.d_s);
    p.h = kv.number("h", p.h);
    p.c_drag = kv.number("c_drag", p.c_drag);
    p.mu = kv.number("mu", p.mu);
    p.T_min = kv.number("T_min", p.T_min);
    p.T_max = kv.number("T_max", p.T_max);
    p.delta_max = kv.number("delta_max", p.delta_max);
    TireParams& t = p.tire;
    t.C_x = kv.number("tire.C_x", t.C_x);
    t.k_x = kv.number("tire.k_x", t.k_x);
    t.E_x = kv.number("tire.E_x", t.E_x);
    t.C_y = kv.number("tire.C_y", t.C_y);
    t.k_y = kv.number("tire.k_y", t.k_y);
    t.E_y = kv.number("tire.E_y", t.E_y);
    t.r_bx1 = kv.number("tire.r_bx1", t.r_bx1);
    t.r_bx2 = kv.number("tire.r_bx2", t.r_bx2);
    t.C_xa = kv.number("tire.C_xa", t.C_xa);
    t.r_by1 = kv.number("tire.r_by1", t.r_by1);
    t.r_by2 = kv.number("tire.r_by2", t.r_by2);
    t.C_yk = kv.number("tire.C_yk", t.C_yk);
    kv.finish();
    validate(p);
    return p;
  });
}

VehicleParams load_vehicle(const std::string& path) {
  auto kv = KeyValues::load(path);
  return load_vehicle(kv);
}

SamplingConfig load_sampling(KeyValues& kv) {
  return with_context<SamplingConfig>(kv.name(), [&] {
    SamplingConfig c;
    c.n = kv.integer("n", c.n);
    c.T = kv.number("T", c.T);
    c.dt = kv.number("dt", c.dt);
    c.seed = kv.integer("seed", c.seed);
    c.v_x0 = kv.numbers("v_x0", c.v_x0);
    c.v_y0 = kv.numbers("v_y0", c.v_y0);
    c.mu = kv.numbers("mu", c.mu);
    kv.finish();
    validate(c);
    return c;
  });
}

SamplingConfig load_sampling(const std::string& path) {
  auto kv = KeyValues::load(path);
  return load_sampling(kv);
}

FitConfig load_fit(KeyValues& kv) {
  return with_context<FitConfig>(kv.name(), [&] {
    FitConfig c;
    c.crop_fraction = kv.number("crop_fraction", c.crop_fraction);
    c.ellipse_trim = kv.number("ellipse_trim", c.ellipse_trim);
    c.ax_quantile = kv.number("ax_quantile", c.ax_quantile);
    c.halfspaces.quantile = kv.number("halfspace_quantile", c.halfspaces.quantile);
    c.halfspaces.run_tolerance_deg = kv.number("run_tolerance_deg", c.halfspaces.run_tolerance_deg);
    c.halfspaces.family_separation_deg =
        kv.number("family_separation_deg", c.halfspaces.family_separation_deg);
    c.v_min = kv.number("v_min", c.v_min);
    c.v_max = kv.number("v_max", c.v_max);
    kv.finish();
    auto in_unit = [](double q, const char* key) {
      if (!(q > 0.0 && q <= 1.0)) throw ConfigError(std::string(key) + " must lie in (0, 1]");
    };
    in_unit(c.crop_fraction, "crop_fraction");
    in_unit(c.ax_quantile, "ax_quantile");
    in_unit(c.halfspaces.quantile, "halfspace_quantile");
    if (!(c.ellipse_trim >= 0.0 && c.ellipse_trim < 1.0))
      throw ConfigError("ellipse_trim must lie in [0, 1)");
    if (!(c.v_max > c.v_min)) throw ConfigError("v_max must exceed v_min");
    return c;
  });
}

FitConfig load_fit(const std::string& path) {
  auto kv = KeyValues::load(path);
  return load_fit(kv);
}

PlannerSetup load_planner(KeyValues& kv) {
  return with_context<PlannerSetup>(kv.name(), [&] {
    PlannerSetup s;
    PlannerConfig& p = s.planner;
    p.horizon = kv.number("horizon", p.horizon);
    p.dt = kv.number("dt", p.dt);
    p.vehicle_margin = kv.number("vehicle_margin", p.vehicle_margin);
    p.obstacle_margin = kv.number("obstacle_margin", p.obstacle_margin);
    p.lateral_fraction = kv.number("lateral_fraction", p.lateral_fraction);
    p.braking_fraction = kv.number("braking_fraction", p.braking_fraction);
    p.goal_speed = kv.number("goal_speed", p.goal_speed);
    p.max_violation = kv.number("max_violation", p.max_violation);
    p.max_iterations = static_cast<int>(kv.integer("max_iterations", static_cast<std::uint64_t>(p.max_iterations)));
    PlannerWeights& w = p.weights;
    w.progress = kv.number("weight.progress", w.progress);
    w.lateral = kv.number("weight.lateral", w.lateral);
    w.heading = kv.number("weight.heading", w.heading);
    w.lateral_velocity = kv.number("weight.lateral_velocity", w.lateral_velocity);
    w.bound = kv.number("weight.bound", w.bound);
    w.obstacle = kv.number("weight.obstacle", w.obstacle);
    w.speed = kv.number("weight.speed", w.speed);
    w.effort = kv.number("weight.effort", w.effort);
    w.smooth = kv.number("weight.smooth", w.smooth);
    w.excess = kv.number("weight.excess", w.excess);
    ClosedLoopConfig& l = s.loop;
    l.max_ticks = kv.integer("max_ticks", l.max_ticks);
    l.replan_period = kv.number("replan_period", p.dt);
    l.v0 = kv.number("v0", l.v0);
    l.s0 = kv.number("s0", l.s0);
    l.plant_substeps = static_cast<int>(kv.integer("plant_substeps", static_cast<std::uint64_t>(l.plant_substeps)));
    l.stop_at_lap = kv.flag("stop_at_lap", l.stop_at_lap);
    s.track = kv.text("track", s.track);
    s.half_width = kv.number("half_width", s.half_width);
    s.envelope = kv.text("envelope", s.envelope);
    for (const auto& row : kv.list("obstacle")) {
      if (row.size() != 3 || !(row[2] > 0.0))
        throw ConfigError("obstacle needs 'x, y, radius' with radius > 0");
      s.obstacles.push_back({{row[0], row[1]}, row[2]});
    }
    kv.finish();
    p.steps();
    if (!(s.half_width > p.vehicle_margin)) throw ConfigError("half_width must exceed vehicle_margin");
    if (l.max_ticks < 1) throw ConfigError("max_ticks must be at least 1");
    return s;
  });
}

PlannerSetup load_planner(const std::string& path) {
  auto kv = KeyValues::load(path);
  auto s = load_planner(kv);
  const fs::path base = fs::path(path).parent_path();
  if (!s.envelope.empty()) s.envelope = resolve(base, s.envelope);
  if (s.track != "reference" && s.track.rfind("circle:", 0) != 0 &&
      s.track.rfind("straight:", 0) != 0)
    s.track = resolve(base, s.track);
  return s;
}

Track make_track(const PlannerSetup& setup, const std::string& base_dir) {
  const std::string& t = setup.track;
  if (t == "reference") return reference_circuit(setup.half_width);
  if (t.rfind("circle:", 0) == 0)
    return circular_track(parse_number(t.substr(7), "track circle radius"), setup.half_width);
  if (t.rfind("straight:", 0) == 0)
    return straight_track(parse_number(t.substr(9), "track straight length"), setup.half_width);
  return load_track(resolve(base_dir, t));
}

RunConfig load_run(const std::string& path) {
  auto kv = KeyValues::load(path);
  const fs::path base = fs::path(path).parent_path();
  return with_context<RunConfig>(path, [&] {
    RunConfig r;
    r.vehicle = resolve(base, kv.text("vehicle", ""));
    r.sampling = resolve(base, kv.text("sampling", ""));
    r.fit = resolve(base, kv.text("fit", ""));
    r.planner = resolve(base, kv.text("planner", ""));
    r.out = resolve(base, kv.text("out", r.out));
    if (kv.has("seed")) r.seed = kv.integer("seed", 0);
    kv.finish();
    for (const std::string* p : {&r.vehicle, &r.sampling, &r.fit, &r.planner})
      if (!p->empty() && !fs::exists(*p)) throw ConfigError("referenced file does not exist: " + *p);
    return r;
  });
}

}  // namespace vdyn
