#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vdyn/dynamics.hpp"

namespace vdyn {

struct SamplingConfig {
  std::size_t n = 100000;
  double T = 0.1;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  std::vector<double> v_x0{5.0, 10.0, 20.0, 30.0, 40.0};
  std::vector<double> v_y0{0.0};
  std::vector<double> mu{1.0};
};

void validate(const SamplingConfig& cfg);

struct AccelSample {
  double a_X = 0.0;
  double a_Y = 0.0;
  double a_psi = 0.0;
  Control u{};
  double v_x0 = 0.0;
  double v_y0 = 0.0;
  double mu = 0.0;
};

// Least-squares quadratic fit on a fixed time grid. The pseudo-inverse is
// computed once so that repeated fits on the same grid cost one 3 x n product.
class QuadraticFit {
 public:
  // Throws FitError when fewer than three distinct times are given.
  explicit QuadraticFit(std::span<const double> times);

  // Coefficients, leading first: values ~ c[0] t^2 + c[1] t + c[2].
  std::array<double, 3> operator()(std::span<const double> values) const;

  std::size_t size() const { return n_; }

 private:
  std::size_t n_ = 0;
  double scale_ = 1.0;
  std::vector<double> pinv_;  // 3 x n, row-major, in scaled time
};

std::array<double, 3> fit_quadratic(std::span<const double> times,
                                    std::span<const double> values);

// Counter-based uniform draw in [0, 1) for (seed, index, stream).
double uniform01(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

// Control sample `index` of the stream `seed`, uniform on the admissible box.
Control draw_control(std::uint64_t seed, std::uint64_t index,
                     const VehicleParams& params);

// One constant-control rollout of horizon T reduced to the accelerations
// 2 * leading coefficient of quadratic fits to X(t), Y(t), psi(t).
// Throws NumericError when the rollout diverges.
AccelSample rollout_acceleration(const BodyState& xi0, const Control& u,
                                 const QuadraticFit& fit, double T, double dt,
                                 const VehicleParams& params);

struct FeasibleSet {
  std::vector<AccelSample> samples;  // index order of the draws
  std::size_t diverged = 0;          // rollouts skipped
};

// Monte-Carlo reachable-acceleration set from xi0 (OpenMP over samples).
FeasibleSet feasible_set(const BodyState& xi0, const SamplingConfig& cfg,
                         const VehicleParams& params);

// Worker count for feasible_set; values below 1 keep the runtime default.
void set_thread_count(int n);

// Serial reference; produces bitwise the same output as feasible_set.
FeasibleSet feasible_set_serial(const BodyState& xi0, const SamplingConfig& cfg,
                                const VehicleParams& params);

struct HistogramGrid {
  double x_min = 0.0;
  double x_max = 1.0;
  std::size_t nx = 1;
  double y_min = 0.0;
  double y_max = 1.0;
  std::size_t ny = 1;
};

struct Histogram2D {
  HistogramGrid grid;
  std::vector<std::size_t> counts;  // row-major: counts[iy * nx + ix]

  std::size_t at(std::size_t ix, std::size_t iy) const {
    return counts[iy * grid.nx + ix];
  }
  std::size_t total() const;
};

// Grid spanning the (a_X, a_Y) bounding box of the samples.
HistogramGrid bounding_grid(std::span<const AccelSample> samples, std::size_t nx,
                            std::size_t ny);

// Counts over (a_X, a_Y); samples outside the grid fall in the edge bins.
Histogram2D density_histogram(std::span<const AccelSample> samples,
                              const HistogramGrid& grid);

// Largest bin count over the mean count of occupied bins.
double concentration_ratio(const Histogram2D& hist);

void write_samples_csv(std::ostream& out, std::span<const AccelSample> samples);
void write_samples_csv(const std::string& path, std::span<const AccelSample> samples);
std::vector<AccelSample> read_samples_csv(std::istream& in, const std::string& name);
std::vector<AccelSample> read_samples_csv(const std::string& path);

}  // namespace vdyn
