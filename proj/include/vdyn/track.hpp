#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "vdyn/geometry.hpp"

namespace vdyn {

inline constexpr std::size_t kNoHint = std::numeric_limits<std::size_t>::max();

struct TrackProjection {
  double s = 0.0;
  double lateral = 0.0;  // signed distance, positive to the left of the centerline
  double heading = 0.0;
  double curvature = 0.0;
  std::size_t segment = 0;
};

// Centerline polyline with arc length, heading and curvature at the vertices.
// A closed track joins the last vertex back to the first.
class Track {
 public:
  // Throws ConfigError on fewer than two points, repeated points,
  // a non-positive half-width or a self-intersecting centerline.
  Track(std::vector<Vec2> centerline, double half_width, bool closed);

  const std::vector<Vec2>& points() const { return pts_; }
  double half_width() const { return half_width_; }
  bool closed() const { return closed_; }
  double length() const { return length_; }
  std::size_t segments() const { return closed_ ? pts_.size() : pts_.size() - 1; }
  double s_at_vertex(std::size_t i) const { return s_[i]; }

  // Arc length wrapped into [0, length) for closed tracks, clamped otherwise.
  double wrap(double s) const;
  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  double curvature_at(double s) const;

  // Nearest centerline point. With a hint the search walks locally from that
  // segment, falling back to a full scan when the walk reaches its window.
  // On open tracks the end segments extend as rays, so s may leave [0, length].
  TrackProjection project(Vec2 p, std::size_t hint = kNoHint) const;

 private:
  std::size_t segment_of(double s) const;

  std::vector<Vec2> pts_;
  std::vector<double> s_;        // arc length at each vertex
  std::vector<double> heading_;  // heading of the segment starting at each vertex
  std::vector<double> kappa_;    // curvature at each vertex
  double half_width_ = 0.0;
  bool closed_ = false;
  double length_ = 0.0;
};

inline TrackProjection project(const Track& track, Vec2 p, std::size_t hint = kNoHint) {
  return track.project(p, hint);
}

double wrap_angle(double a);

// File format: "# half_width=<m> closed=<0|1>", then a "s,X,Y" header and rows.
Track load_track(std::istream& in, const std::string& name);
Track load_track(const std::string& path);
void save_track(std::ostream& out, const Track& track);
void save_track(const std::string& path, const Track& track);

Track circular_track(double radius, double half_width, double spacing = 1.0);
Track straight_track(double length, double half_width, double spacing = 1.0);
// Closed circuit: straights of 200 m and 100 m joined by left quarter turns of
// radius 30, 50, 30, 50 m (851 m), starting at the origin heading +X.
Track reference_circuit(double half_width = 6.0, double spacing = 1.0);

struct Obstacle {
  Vec2 center;
  double radius = 0.0;
};

}  // namespace vdyn
