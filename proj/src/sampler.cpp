#include "vdyn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>

#include <Eigen/Dense>
#include <omp.h>

#include "vdyn/csv.hpp"
#include "vdyn/errors.hpp"

namespace vdyn {

void validate(const SamplingConfig& cfg) {
  if (cfg.n < 1) throw ConfigError("n must be at least 1");
  if (!(cfg.dt > 0.0) || !(cfg.T >= cfg.dt)) {
    throw ConfigError("sampling horizon must satisfy T >= dt > 0");
  }
  if (cfg.v_x0.empty() || cfg.v_y0.empty() || cfg.mu.empty()) {
    throw ConfigError("sampling grid lists must be non-empty");
  }
  for (double v : cfg.v_x0) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("v_x0 values must be positive");
  }
  for (double v : cfg.v_y0) {
    if (!std::isfinite(v)) throw ConfigError("v_y0 values must be finite");
  }
  for (double m : cfg.mu) {
    if (!(m > 0.0 && m <= 2.0)) throw ConfigError("mu values must lie in (0, 2]");
  }
}

QuadraticFit::QuadraticFit(std::span<const double> times) : n_(times.size()) {
  std::set<double> distinct(times.begin(), times.end());
  if (distinct.size() < 3) {
    throw FitError("quadratic fit needs at least 3 distinct time points");
  }
  double tmax = 0.0;
  for (double t : times) tmax = std::max(tmax, std::abs(t));
  scale_ = tmax > 0.0 ? tmax : 1.0;

  Eigen::MatrixXd V(n_, 3);
  for (std::size_t i = 0; i < n_; ++i) {
    const double s = times[i] / scale_;
    V(i, 0) = s * s;
    V(i, 1) = s;
    V(i, 2) = 1.0;
  }
  const auto qr = V.colPivHouseholderQr();
  if (qr.rank() < 3) throw FitError("quadratic fit design matrix is rank deficient");
  const Eigen::MatrixXd P = qr.solve(Eigen::MatrixXd::Identity(n_, n_));
  pinv_.resize(3 * n_);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < n_; ++c) pinv_[r * n_ + c] = P(r, c);
  }
}

std::array<double, 3> QuadraticFit::operator()(std::span<const double> values) const {
  if (values.size() != n_) throw FitError("quadratic fit: value count mismatch");
  std::array<double, 3> c{};
  for (std::size_t r = 0; r < 3; ++r) {
    double acc = 0.0;
    const double* row = pinv_.data() + r * n_;
    for (std::size_t i = 0; i < n_; ++i) acc += row[i] * values[i];
    c[r] = acc;
  }
  // back from scaled time s = t / scale_
  return {c[0] / (scale_ * scale_), c[1] / scale_, c[2]};
}

std::array<double, 3> fit_quadratic(std::span<const double> times,
                                    std::span<const double> values) {
  return QuadraticFit(times)(values);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double uniform01(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  const std::uint64_t h =
      splitmix64(splitmix64(splitmix64(seed) ^ index) + stream * 0xd1b54a32d192ed03ULL);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

Control draw_control(std::uint64_t seed, std::uint64_t index, const VehicleParams& p) {
  Control u;
  u.T_f = p.T_min + (p.T_max - p.T_min) * uniform01(seed, index, 0);
  u.T_r = p.T_min * (1.0 - uniform01(seed, index, 1));
  u.delta = p.delta_max * (2.0 * uniform01(seed, index, 2) - 1.0);
  return u;
}

AccelSample rollout_acceleration(const BodyState& xi0, const Control& u,
                                 const QuadraticFit& fit, double T, double dt,
                                 const VehicleParams& params) {
  const auto traj = simulate(xi0, u, T, dt, params);
  if (traj.size() != fit.size()) throw FitError("rollout length does not match fit grid");
  std::vector<double> x(traj.size()), y(traj.size()), psi(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    x[k] = traj[k].X;
    y[k] = traj[k].Y;
    psi[k] = traj[k].psi;
  }
  AccelSample s;
  s.a_X = 2.0 * fit(x)[0];
  s.a_Y = 2.0 * fit(y)[0];
  s.a_psi = 2.0 * fit(psi)[0];
  if (!std::isfinite(s.a_X) || !std::isfinite(s.a_Y) || !std::isfinite(s.a_psi)) {
    throw NumericError("rollout produced non-finite accelerations");
  }
  s.u = u;
  s.v_x0 = xi0.V_x;
  s.v_y0 = xi0.V_y;
  s.mu = params.mu;
  return s;
}

namespace {

QuadraticFit make_grid_fit(const SamplingConfig& cfg) {
  const auto steps = static_cast<std::size_t>(std::floor(cfg.T / cfg.dt + 1e-9));
  std::vector<double> times(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) times[k] = static_cast<double>(k) * cfg.dt;
  return QuadraticFit(times);
}

std::optional<AccelSample> sample_one(const BodyState& xi0, const SamplingConfig& cfg,
                                      const VehicleParams& params,
                                      const QuadraticFit& fit, std::size_t i) {
  const Control u = draw_control(cfg.seed, i, params);
  try {
    return rollout_acceleration(xi0, u, fit, cfg.T, cfg.dt, params);
  } catch (const NumericError&) {
    return std::nullopt;
  }
}

FeasibleSet compact(std::vector<std::optional<AccelSample>>&& slots) {
  FeasibleSet out;
  out.samples.reserve(slots.size());
  for (auto& s : slots) {
    if (s) {
      out.samples.push_back(*s);
    } else {
      ++out.diverged;
    }
  }
  return out;
}

}  // namespace

FeasibleSet feasible_set_serial(const BodyState& xi0, const SamplingConfig& cfg,
                                const VehicleParams& params) {
  validate(cfg);
  const QuadraticFit fit = make_grid_fit(cfg);
  std::vector<std::optional<AccelSample>> slots(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) slots[i] = sample_one(xi0, cfg, params, fit, i);
  return compact(std::move(slots));
}

void set_thread_count(int n) {
  if (n >= 1) omp_set_num_threads(n);
}

FeasibleSet feasible_set(const BodyState& xi0, const SamplingConfig& cfg,
                         const VehicleParams& params) {
  validate(cfg);
  const QuadraticFit fit = make_grid_fit(cfg);
  std::vector<std::optional<AccelSample>> slots(cfg.n);
  const auto n = static_cast<std::int64_t>(cfg.n);
#pragma omp parallel for schedule(dynamic, 64) default(none) shared(slots, xi0, cfg, params, fit, n)
  for (std::int64_t i = 0; i < n; ++i) {
    slots[static_cast<std::size_t>(i)] =
        sample_one(xi0, cfg, params, fit, static_cast<std::size_t>(i));
  }
  return compact(std::move(slots));
}

std::size_t Histogram2D::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

HistogramGrid bounding_grid(std::span<const AccelSample> samples, std::size_t nx,
                            std::size_t ny) {
  if (samples.empty()) throw FitError("histogram needs at least one sample");
  HistogramGrid g;
  g.nx = std::max<std::size_t>(nx, 1);
  g.ny = std::max<std::size_t>(ny, 1);
  g.x_min = g.y_min = std::numeric_limits<double>::infinity();
  g.x_max = g.y_max = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    g.x_min = std::min(g.x_min, s.a_X);
    g.x_max = std::max(g.x_max, s.a_X);
    g.y_min = std::min(g.y_min, s.a_Y);
    g.y_max = std::max(g.y_max, s.a_Y);
  }
  if (g.x_max <= g.x_min) g.x_max = g.x_min + 1.0;
  if (g.y_max <= g.y_min) g.y_max = g.y_min + 1.0;
  return g;
}

namespace {

std::size_t bin_index(double v, double lo, double hi, std::size_t n) {
  const double f = (v - lo) / (hi - lo) * static_cast<double>(n);
  if (!(f > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(f), n - 1);
}

}  // namespace

Histogram2D density_histogram(std::span<const AccelSample> samples,
                              const HistogramGrid& grid) {
  if (samples.empty()) throw FitError("histogram needs at least one sample");
  Histogram2D h{grid, std::vector<std::size_t>(grid.nx * grid.ny, 0)};
  for (const auto& s : samples) {
    const auto ix = bin_index(s.a_X, grid.x_min, grid.x_max, grid.nx);
    const auto iy = bin_index(s.a_Y, grid.y_min, grid.y_max, grid.ny);
    ++h.counts[iy * grid.nx + ix];
  }
  return h;
}

double concentration_ratio(const Histogram2D& hist) {
  std::size_t occupied = 0;
  std::size_t total = 0;
  std::size_t peak = 0;
  for (auto c : hist.counts) {
    if (c == 0) continue;
    ++occupied;
    total += c;
    peak = std::max(peak, c);
  }
  if (occupied == 0) return 0.0;
  return static_cast<double>(peak) /
         (static_cast<double>(total) / static_cast<double>(occupied));
}

namespace {
constexpr const char* kSampleHeader = "v_x0,v_y0,mu,T_f,T_r,delta,a_X,a_Y,a_psi";
}

void write_samples_csv(std::ostream& out, std::span<const AccelSample> samples) {
  out << kSampleHeader << '\n';
  for (const auto& s : samples) {
    out << format_number(s.v_x0) << ',' << format_number(s.v_y0) << ','
        << format_number(s.mu) << ',' << format_number(s.u.T_f) << ','
        << format_number(s.u.T_r) << ',' << format_number(s.u.delta) << ','
        << format_number(s.a_X) << ',' << format_number(s.a_Y) << ','
        << format_number(s.a_psi) << '\n';
  }
}

void write_samples_csv(const std::string& path, std::span<const AccelSample> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  write_samples_csv(out, samples);
}

std::vector<AccelSample> read_samples_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kSampleHeader) {
    throw ConfigError(name + ":1: expected header '" + std::string(kSampleHeader) + "'");
  }
  std::vector<AccelSample> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    const std::string ctx = name + ":" + std::to_string(lineno);
    if (f.size() != 9) throw ConfigError(ctx + ": expected 9 columns");
    AccelSample s;
    s.v_x0 = parse_number(f[0], ctx);
    s.v_y0 = parse_number(f[1], ctx);
    s.mu = parse_number(f[2], ctx);
    s.u.T_f = parse_number(f[3], ctx);
    s.u.T_r = parse_number(f[4], ctx);
    s.u.delta = parse_number(f[5], ctx);
    s.a_X = parse_number(f[6], ctx);
    s.a_Y = parse_number(f[7], ctx);
    s.a_psi = parse_number(f[8], ctx);
    out.push_back(s);
  }
  return out;
}

std::vector<AccelSample> read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sample file '" + path + "'");
  return read_samples_csv(in, path);
}

}  // namespace vdyn
