#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vdyn/geometry.hpp"
#include "vdyn/sampler.hpp"

namespace vdyn {

inline constexpr int kEnvelopeSchemaVersion = 1;

// Convex acceleration envelope: truncated ellipse in (a_X, a_Y), speed
// dependent a_X bounds and six halfspaces A [a_X, a_Y, a_psi] <= b.
struct EnvelopeModel {
  double alpha = 1.0;
  double beta = 1.0;
  std::array<std::array<double, 3>, 6> A{};
  std::array<double, 6> b{};
  std::array<double, 3> ax_min_poly{};  // constant first
  std::array<double, 2> ax_max_poly{};  // constant first
  double v_min = 0.0;                   // calibrated speed range
  double v_max = 50.0;

  // Polynomials are clamped at the calibrated range endpoints.
  double ax_min(double v_x) const;
  double ax_max(double v_x) const;

  friend bool operator==(const EnvelopeModel&, const EnvelopeModel&) = default;
};

// Constants reported for the reference berline.
EnvelopeModel reference_envelope();

// Throws FitError when an invariant does not hold (positive semi-axes, origin
// strictly inside every constraint over the calibrated range).
void check_invariants(const EnvelopeModel& env);

struct CropBand {
  double lo = 0.0;
  double hi = 0.0;
};

// [fraction * min a_X, fraction * max a_X] of the hull.
CropBand default_crop_band(std::span<const Vec2> hull, double fraction = 0.8);

struct EllipseFit {
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t used = 0;  // vertices in the final fit
};

// Least squares of (x/alpha)^2 + (y/beta)^2 = 1 on the hull vertices inside the
// crop band. Vertices well inside the fitted ellipse (normalized radius below
// 1 - trim) are the flat truncation edges and are dropped before refitting.
EllipseFit fit_ellipse(std::span<const Vec2> hull, CropBand band,
                       double trim = 0.02);

struct HalfspaceOptions {
  double quantile = 0.999;       // joint fraction of samples kept inside
  double run_tolerance_deg = 3.0;
  double family_separation_deg = 15.0;
};

struct Halfspaces {
  std::array<std::array<double, 3>, 6> A{};
  std::array<double, 6> b{};
};

Halfspaces fit_halfspaces(std::span<const AccelSample> samples,
                          const HalfspaceOptions& opt = {});

struct AxBounds {
  std::array<double, 3> ax_min_poly{};
  std::array<double, 2> ax_max_poly{};
};

// Per-speed a_X extreme quantiles fitted by a quadratic (min) and a line (max).
AxBounds fit_ax_bounds(const std::map<double, std::vector<AccelSample>>& by_speed,
                       double quantile = 0.999);

// Nearest-rank value v with at least `q` of `values` <= v.
double upper_quantile(std::vector<double> values, double q);

struct FitConfig {
  double crop_fraction = 0.8;
  double ellipse_trim = 0.02;
  double ax_quantile = 0.999;
  HalfspaceOptions halfspaces{};
  double v_min = 0.0;
  double v_max = 50.0;
};

EnvelopeModel build_envelope(std::span<const AccelSample> samples,
                             const FitConfig& cfg = {});
// Reads and pools sample CSV files; errors name the offending file.
EnvelopeModel build_envelope(const std::vector<std::string>& csv_paths,
                             const FitConfig& cfg = {});

void save_envelope(std::ostream& out, const EnvelopeModel& env);
void save_envelope(const std::string& path, const EnvelopeModel& env);
EnvelopeModel load_envelope(std::istream& in, const std::string& name);
EnvelopeModel load_envelope(const std::string& path);

}  // namespace vdyn
