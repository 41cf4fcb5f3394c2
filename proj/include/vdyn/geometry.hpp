#pragma once

#include <span>
#include <vector>

namespace vdyn {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double cross(Vec2 o, Vec2 a, Vec2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 a);

// Counter-clockwise hull vertices (monotone chain), collinear boundary points
// dropped. Throws FitError for fewer than three non-collinear points.
std::vector<Vec2> convex_hull_2d(std::vector<Vec2> points);

// Signed area, positive for counter-clockwise polygons.
double polygon_area(std::span<const Vec2> polygon);

// True when p lies inside or within `tol` of a counter-clockwise convex polygon.
bool convex_contains(std::span<const Vec2> hull, Vec2 p, double tol = 1e-9);

}  // namespace vdyn
