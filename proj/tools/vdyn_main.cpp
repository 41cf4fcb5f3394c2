#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vdyn/closed_loop.hpp"
#include "vdyn/config.hpp"
#include "vdyn/csv.hpp"
#include "vdyn/dynamics.hpp"
#include "vdyn/envelope.hpp"
#include "vdyn/errors.hpp"
#include "vdyn/integrator_model.hpp"
#include "vdyn/sampler.hpp"

namespace fs = std::filesystem;
using namespace vdyn;

namespace {

enum Exit { kOk = 0, kInfeasible = 1, kConfig = 2, kNumeric = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
};

struct Inputs {
  VehicleParams vehicle;
  SamplingConfig sampling;
  FitConfig fit;
  PlannerSetup planner;
  std::string out = "out";
  std::string base = ".";
};

Inputs resolve_inputs(const Common& c) {
  Inputs in;
  if (!c.config.empty()) {
    const RunConfig run = load_run(c.config);
    in.base = fs::path(c.config).parent_path().string();
    if (!run.vehicle.empty()) in.vehicle = load_vehicle(run.vehicle);
    if (!run.sampling.empty()) in.sampling = load_sampling(run.sampling);
    if (!run.fit.empty()) in.fit = load_fit(run.fit);
    if (!run.planner.empty()) {
      in.planner = load_planner(run.planner);
      in.base = fs::path(run.planner).parent_path().string();
    }
    in.out = run.out;
    if (run.seed) in.sampling.seed = *run.seed;
  }
  if (c.seed) in.sampling.seed = *c.seed;
  if (!c.out.empty()) in.out = c.out;
  if (in.base.empty()) in.base = ".";
  set_thread_count(c.threads);
  return in;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError(dir + ": cannot create output directory: " + ec.message());
}

std::string sample_file(double v_x0, double v_y0, double mu) {
  return "samples_vx" + format_number(v_x0) + "_vy" + format_number(v_y0) + "_mu" +
         format_number(mu) + ".csv";
}

int cmd_sample(const Common& c, std::optional<std::size_t> n_override) {
  Inputs in = resolve_inputs(c);
  if (n_override) in.sampling.n = *n_override;
  validate(in.sampling);
  ensure_dir(in.out);
  for (double mu : in.sampling.mu) {
    for (double vy : in.sampling.v_y0) {
      for (double vx : in.sampling.v_x0) {
        VehicleParams p = in.vehicle;
        p.mu = mu;
        BodyState xi0 = rolling_state(vx, vy, p);
        const FeasibleSet set = feasible_set(xi0, in.sampling, p);
        const std::string path = (fs::path(in.out) / sample_file(vx, vy, mu)).string();
        write_samples_csv(path, set.samples);
        std::string area = "n/a";
        if (set.samples.size() >= 3) {
          std::vector<Vec2> pts;
          for (const auto& s : set.samples) pts.push_back({s.a_X, s.a_Y});
          try {
            area = format_number(polygon_area(convex_hull_2d(std::move(pts))));
          } catch (const FitError&) {
          }
        }
        std::cout << "v_x0=" << format_number(vx) << " v_y0=" << format_number(vy)
                  << " mu=" << format_number(mu) << " count=" << set.samples.size()
                  << " diverged=" << set.diverged << " hull_area=" << area << " -> " << path
                  << '\n';
      }
    }
  }
  return kOk;
}

int cmd_fit(const Common& c, std::vector<std::string> files, std::string output) {
  Inputs in = resolve_inputs(c);
  if (files.empty()) {
    if (fs::is_directory(in.out))
      for (const auto& e : fs::directory_iterator(in.out)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("samples_", 0) == 0 && e.path().extension() == ".csv")
          files.push_back(e.path().string());
      }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no sample CSV files given or found in " + in.out);
  }
  const EnvelopeModel env = build_envelope(files, in.fit);
  if (output.empty()) {
    ensure_dir(in.out);
    output = (fs::path(in.out) / "envelope.json").string();
  }
  save_envelope(output, env);
  std::cout << "alpha=" << format_number(env.alpha) << " beta=" << format_number(env.beta) << '\n';
  for (std::size_t r = 0; r < 6; ++r)
    std::cout << "A[" << r + 1 << "]=" << format_number(env.A[r][0]) << ','
              << format_number(env.A[r][1]) << ',' << format_number(env.A[r][2])
              << " b=" << format_number(env.b[r]) << '\n';
  std::cout << "ax_min=" << format_number(env.ax_min_poly[0]) << ','
            << format_number(env.ax_min_poly[1]) << ',' << format_number(env.ax_min_poly[2])
            << " ax_max=" << format_number(env.ax_max_poly[0]) << ','
            << format_number(env.ax_max_poly[1]) << "\nwrote " << output << '\n';
  return kOk;
}

EnvelopeModel envelope_from(const std::string& path) {
  return path.empty() ? reference_envelope() : load_envelope(path);
}

int cmd_check(const std::string& envelope_path, const std::vector<double>& a, double v_x) {
  const EnvelopeModel env = envelope_from(envelope_path);
  const FeasibilityReport rep = is_feasible(env, {a[0], a[1], a[2]}, v_x);
  if (rep.feasible) {
    std::cout << "feasible\n";
    return kOk;
  }
  std::cout << "infeasible: " << rep.violations() << '\n';
  return kInfeasible;
}

struct PlanRun {
  Track track;
  EnvelopeModel env;
  BicycleParams bicycle;
  PlannerSetup setup;
  std::string out;
};

PlanRun plan_inputs(const Common& c, const std::string& envelope_override) {
  Inputs in = resolve_inputs(c);
  PlanRun r{make_track(in.planner, in.base), reference_envelope(), bicycle_params(in.vehicle),
            in.planner, in.out};
  const std::string env_path = envelope_override.empty() ? in.planner.envelope : envelope_override;
  r.env = envelope_from(env_path);
  ensure_dir(in.out);
  return r;
}

void print_metrics_header() {
  std::printf("%-18s %8s %14s %14s %14s %16s\n", "model", "lap", "avg_solve_ms", "rms_lat_err_m",
              "max_lat_err_m", "min_corner_m_s");
}

void print_metrics(const PlanLog& log, const Metrics& m) {
  std::printf("%-18s %8s %14s %14s %14s %16s\n", to_string(log.model).c_str(),
              log.lap_completed ? "yes" : "no", format_number(1e3 * m.avg_solve_s, 4).c_str(),
              format_number(m.rms_lat_err, 4).c_str(), format_number(m.max_lat_err, 4).c_str(),
              format_number(m.min_corner_speed, 4).c_str());
}

PlanLog run_model(const PlanRun& r, PlannerModel model, Metrics& m) {
  PlanLog log = run_closed_loop(model, r.track, r.setup.obstacles, r.env, r.bicycle,
                                r.setup.planner, r.setup.loop);
  write_plan_log_csv((fs::path(r.out) / ("plan_" + to_string(model) + ".csv")).string(), log);
  m = metrics(log, r.track);
  return log;
}

bool lap_ok(const PlanRun& r, const PlanLog& log) {
  return log.lap_completed || !r.setup.loop.stop_at_lap;
}

int cmd_plan(const Common& c, const std::string& model_name, const std::string& envelope) {
  const PlanRun r = plan_inputs(c, envelope);
  const PlannerModel model =
      model_name == "bicycle" ? PlannerModel::kKinematicBicycle : PlannerModel::kDoubleIntegrator;
  Metrics m;
  const PlanLog log = run_model(r, model, m);
  print_metrics_header();
  print_metrics(log, m);
  std::cout << "planner failures: " << log.failures << '\n';
  return lap_ok(r, log) ? kOk : kInfeasible;
}

int cmd_compare(const Common& c, const std::string& envelope) {
  const PlanRun r = plan_inputs(c, envelope);
  Metrics md, mb;
  const PlanLog ld = run_model(r, PlannerModel::kDoubleIntegrator, md);
  const PlanLog lb = run_model(r, PlannerModel::kKinematicBicycle, mb);

  print_metrics_header();
  print_metrics(ld, md);
  print_metrics(lb, mb);

  std::ofstream table(fs::path(r.out) / "metrics.csv");
  table << "model,lap_completed,avg_solve_ms,rms_lat_err,max_lat_err,min_corner_speed,failures\n";
  for (const auto* p : {&ld, &lb}) {
    const Metrics& m = p == &ld ? md : mb;
    table << to_string(p->model) << ',' << (p->lap_completed ? 1 : 0) << ','
          << format_number(1e3 * m.avg_solve_s) << ',' << format_number(m.rms_lat_err) << ','
          << format_number(m.max_lat_err) << ',' << format_number(m.min_corner_speed) << ','
          << p->failures << '\n';
  }

  const double a_lat = lateral_limit(r.env);
  const double s_start = r.track.project(r.track.point_at(r.setup.loop.s0)).s;
  std::ofstream prof(fs::path(r.out) / "speed_profile.csv");
  prof << "s,v_proposed,v_bicycle,v_limit\n";
  const std::size_t n = std::min(md.profile_s.size(), mb.profile_s.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double kappa = std::fabs(r.track.curvature_at(s_start + md.profile_s[i]));
    prof << format_number(md.profile_s[i]) << ',' << format_number(md.profile_v[i]) << ','
         << format_number(mb.profile_v[i]) << ','
         << (kappa > 1e-3 ? format_number(std::sqrt(a_lat / kappa)) : std::string()) << '\n';
  }
  std::cout << "wrote " << (fs::path(r.out) / "metrics.csv").string() << " and speed_profile.csv\n";
  return lap_ok(r, ld) && lap_ok(r, lb) ? kOk : kInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicle feasibility toolkit: sample, fit, check, plan, compare"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config, "run configuration file");
  app.add_option("--seed", common.seed, "sampling seed override");
  app.add_option("--out", common.out, "output directory");
  app.add_option("--threads", common.threads, "worker threads for sampling")->check(CLI::PositiveNumber);

  auto* sample = app.add_subcommand("sample", "sample reachable accelerations over the grid");
  std::optional<std::size_t> n_override;
  sample->add_option("-n,--samples", n_override, "samples per grid point");

  auto* fit = app.add_subcommand("fit", "fit an envelope to sample CSV files");
  std::vector<std::string> fit_files;
  std::string fit_output;
  fit->add_option("files", fit_files, "sample CSV files (default: samples_*.csv in the output directory)");
  fit->add_option("-o,--output", fit_output, "envelope JSON path");

  auto* check = app.add_subcommand("check", "check an acceleration against an envelope");
  std::string envelope;
  std::vector<double> accel;
  double v_x = 0.0;
  check->add_option("-e,--envelope", envelope, "envelope JSON (default: reference constants)");
  check->add_option("-a,--accel", accel, "a_X a_Y a_psi")->expected(3)->required();
  check->add_option("-v,--speed", v_x, "longitudinal speed (m/s)")->required();

  auto* plan = app.add_subcommand("plan", "closed-loop run of one planner");
  std::string model = "di";
  plan->add_option("-m,--model", model, "di or bicycle")->check(CLI::IsMember({"di", "bicycle"}));
  plan->add_option("-e,--envelope", envelope, "envelope JSON (default: planner config or reference)");

  auto* compare = app.add_subcommand("compare", "run both planners and write metrics");
  compare->add_option("-e,--envelope", envelope, "envelope JSON (default: planner config or reference)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*sample) return cmd_sample(common, n_override);
    if (*fit) return cmd_fit(common, fit_files, fit_output);
    if (*check) return cmd_check(envelope, accel, v_x);
    if (*plan) return cmd_plan(common, model, envelope);
    if (*compare) return cmd_compare(common, envelope);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return kNumeric;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  }
  return kOk;
}
