#include "vdyn/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "vdyn/errors.hpp"

namespace vdyn {

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

std::vector<Vec2> convex_hull_2d(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) throw FitError("convex hull needs at least 3 distinct points");

  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0.0) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  if (hull.size() < 3) throw FitError("convex hull of collinear points is degenerate");
  return hull;
}

double polygon_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

bool convex_contains(std::span<const Vec2> hull, Vec2 p, double tol) {
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 a = hull[i];
    const Vec2 b = hull[(i + 1) % hull.size()];
    const double len = norm(b - a);
    if (len == 0.0) continue;
    if (cross(a, b, p) / len < -tol) return false;
  }
  return true;
}

}  // namespace vdyn
