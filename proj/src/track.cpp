#include "vdyn/track.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "vdyn/csv.hpp"
#include "vdyn/errors.hpp"

namespace vdyn {

namespace {

constexpr std::size_t kWalkWindow = 40;

bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(a, b, c), d2 = cross(a, b, d);
  const double d3 = cross(c, d, a), d4 = cross(c, d, b);
  return ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0)) && d1 != 0.0 &&
         d2 != 0.0 && d3 != 0.0 && d4 != 0.0;
}

struct SegmentHit {
  double dist2 = 0.0;
  double t = 0.0;
};

// Open ends extend the first and last segments as rays.
SegmentHit closest_on_segment(Vec2 a, Vec2 b, Vec2 p, bool open_start, bool open_end) {
  const Vec2 d = b - a;
  const double len2 = dot(d, d);
  const double t = std::clamp(dot(p - a, d) / len2, open_start ? -1e300 : 0.0,
                              open_end ? 1e300 : 1.0);
  const Vec2 q = a + t * d;
  return {dot(p - q, p - q), t};
}

}  // namespace

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

Track::Track(std::vector<Vec2> centerline, double half_width, bool closed)
    : pts_(std::move(centerline)), half_width_(half_width), closed_(closed) {
  if (!(half_width_ > 0.0)) throw ConfigError("track half-width must be positive");
  if (closed_ && pts_.size() > 1 && norm(pts_.front() - pts_.back()) < 1e-9) pts_.pop_back();
  if (pts_.size() < (closed_ ? 3u : 2u)) throw ConfigError("track needs more centerline points");

  const std::size_t nseg = segments();
  s_.assign(pts_.size(), 0.0);
  heading_.assign(pts_.size(), 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < nseg; ++i) {
    const Vec2 d = pts_[(i + 1) % pts_.size()] - pts_[i];
    const double len = norm(d);
    if (!(len > 1e-9)) throw ConfigError("track has repeated point at index " + std::to_string(i + 1));
    s_[i] = s;
    heading_[i] = std::atan2(d.y, d.x);
    s += len;
    if (!closed_ && i + 1 == nseg) {
      s_[i + 1] = s;
      heading_[i + 1] = heading_[i];
    }
  }
  length_ = s;

  kappa_.assign(pts_.size(), 0.0);
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    if (!closed_ && (i == 0 || i + 1 == pts_.size())) continue;
    const std::size_t prev = (i + pts_.size() - 1) % pts_.size();
    const double len_prev = norm(pts_[i] - pts_[prev]);
    const double len_next = norm(pts_[(i + 1) % pts_.size()] - pts_[i]);
    kappa_[i] = wrap_angle(heading_[i] - heading_[prev]) / (0.5 * (len_prev + len_next));
  }

  for (std::size_t i = 0; i < nseg; ++i) {
    for (std::size_t j = i + 2; j < nseg; ++j) {
      if (closed_ && i == 0 && j + 1 == nseg) continue;
      if (segments_cross(pts_[i], pts_[(i + 1) % pts_.size()], pts_[j],
                         pts_[(j + 1) % pts_.size()]))
        throw ConfigError("track centerline self-intersects at segments " + std::to_string(i) +
                          " and " + std::to_string(j));
    }
  }
}

double Track::wrap(double s) const {
  if (closed_) {
    s = std::fmod(s, length_);
    if (s < 0.0) s += length_;
    return s;
  }
  return std::clamp(s, 0.0, length_);
}

std::size_t Track::segment_of(double s) const {
  s = wrap(s);
  const auto it = std::upper_bound(s_.begin(), s_.begin() + static_cast<long>(segments()), s);
  return static_cast<std::size_t>(std::max<long>(0, (it - s_.begin()) - 1));
}

Vec2 Track::point_at(double s) const {
  s = wrap(s);
  const std::size_t i = segment_of(s);
  const Vec2 a = pts_[i], b = pts_[(i + 1) % pts_.size()];
  const double t = (s - s_[i]) / norm(b - a);
  return a + t * (b - a);
}

double Track::heading_at(double s) const { return heading_[segment_of(s)]; }

double Track::curvature_at(double s) const {
  s = wrap(s);
  const std::size_t i = segment_of(s);
  const std::size_t j = (i + 1) % pts_.size();
  const double t = (s - s_[i]) / norm(pts_[j] - pts_[i]);
  return (1.0 - t) * kappa_[i] + t * kappa_[j];
}

TrackProjection Track::project(Vec2 p, std::size_t hint) const {
  const std::size_t nseg = segments();
  const auto& pts = pts_;
  auto eval = [&](std::size_t i) {
    return closest_on_segment(pts[i], pts[(i + 1) % pts.size()], p, !closed_ && i == 0,
                              !closed_ && i + 1 == nseg);
  };

  std::size_t best = 0;
  SegmentHit hit{};
  bool found = false;
  if (hint != kNoHint && nseg > 2 * kWalkWindow + 1) {
    hint %= nseg;
    best = hint;
    hit = eval(hint);
    std::size_t reach = 0;
    for (int dir : {-1, 1}) {
      std::size_t i = hint;
      for (std::size_t k = 1; k <= kWalkWindow; ++k) {
        if (!closed_ && ((dir < 0 && i == 0) || (dir > 0 && i + 1 == nseg))) break;
        i = dir > 0 ? (i + 1) % nseg : (i + nseg - 1) % nseg;
        const SegmentHit h = eval(i);
        if (h.dist2 < hit.dist2) {
          hit = h;
          best = i;
          reach = std::max(reach, k);
        }
      }
    }
    found = reach < kWalkWindow;
  }
  if (!found) {
    hit = eval(0);
    best = 0;
    for (std::size_t i = 1; i < nseg; ++i) {
      const SegmentHit h = eval(i);
      if (h.dist2 < hit.dist2) {
        hit = h;
        best = i;
      }
    }
  }

  const Vec2 a = pts[best], b = pts[(best + 1) % pts.size()];
  const double len = norm(b - a);
  TrackProjection out;
  out.segment = best;
  out.s = s_[best] + hit.t * len;
  if (closed_ && out.s >= length_) out.s -= length_;
  out.heading = heading_[best];
  const std::size_t j = (best + 1) % pts.size();
  const double tc = std::clamp(hit.t, 0.0, 1.0);
  out.curvature = (1.0 - tc) * kappa_[best] + tc * kappa_[j];
  const double side = cross(a, b, p) / len;
  out.lateral = std::copysign(std::sqrt(hit.dist2), side);
  if (side == 0.0) out.lateral = 0.0;
  return out;
}

Track load_track(std::istream& in, const std::string& name) {
  std::string line;
  double half_width = 0.0;
  bool closed = false;
  bool have_meta = false;
  bool have_header = false;
  std::vector<Vec2> pts;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = name + ":" + std::to_string(lineno);
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      std::istringstream meta{std::string(t.substr(1))};
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        if (key == "half_width") {
          half_width = parse_number(val, where + " half_width");
          have_meta = true;
        } else if (key == "closed") {
          if (val != "0" && val != "1") throw ConfigError(where + ": closed must be 0 or 1");
          closed = val == "1";
        }
      }
      continue;
    }
    if (!have_header) {
      if (t != "s,X,Y") throw ConfigError(where + ": expected header 's,X,Y'");
      have_header = true;
      continue;
    }
    const auto f = split(t, ',');
    if (f.size() != 3) throw ConfigError(where + ": expected 3 fields");
    pts.push_back({parse_number(f[1], where + " X"), parse_number(f[2], where + " Y")});
  }
  if (!have_meta) throw ConfigError(name + ": missing '# half_width=... closed=...' line");
  try {
    return Track(std::move(pts), half_width, closed);
  } catch (const ConfigError& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

Track load_track(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  return load_track(in, path);
}

void save_track(std::ostream& out, const Track& track) {
  out << "# half_width=" << format_number(track.half_width())
      << " closed=" << (track.closed() ? 1 : 0) << "\ns,X,Y\n";
  for (std::size_t i = 0; i < track.points().size(); ++i) {
    const Vec2 p = track.points()[i];
    out << format_number(track.s_at_vertex(i)) << ',' << format_number(p.x) << ','
        << format_number(p.y) << '\n';
  }
}

void save_track(const std::string& path, const Track& track) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot open for writing");
  save_track(out, track);
}

Track circular_track(double radius, double half_width, double spacing) {
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi * radius / spacing));
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    // Counter-clockwise, starting at the bottom heading +X.
    pts.push_back({radius * std::sin(a), radius * (1.0 - std::cos(a))});
  }
  return Track(std::move(pts), half_width, true);
}

Track straight_track(double length, double half_width, double spacing) {
  const auto n = static_cast<std::size_t>(std::ceil(length / spacing));
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i <= n; ++i) pts.push_back({length * static_cast<double>(i) / static_cast<double>(n), 0.0});
  return Track(std::move(pts), half_width, false);
}

Track reference_circuit(double half_width, double spacing) {
  std::vector<Vec2> pts;
  Vec2 p{0.0, 0.0};
  double heading = 0.0;
  auto straight = [&](double len) {
    const auto n = static_cast<std::size_t>(std::ceil(len / spacing));
    const Vec2 d{std::cos(heading), std::sin(heading)};
    for (std::size_t i = 0; i < n; ++i) pts.push_back(p + (len * static_cast<double>(i) / static_cast<double>(n)) * d);
    p = p + len * d;
  };
  auto left_turn = [&](double radius) {
    const double sweep = 0.5 * std::numbers::pi;
    const auto n = static_cast<std::size_t>(std::ceil(radius * sweep / spacing));
    const Vec2 c = p + radius * Vec2{-std::sin(heading), std::cos(heading)};
    for (std::size_t i = 0; i < n; ++i) {
      const double a = heading + sweep * static_cast<double>(i) / static_cast<double>(n);
      pts.push_back(c + radius * Vec2{std::sin(a), -std::cos(a)});
    }
    heading += sweep;
    p = c + radius * Vec2{std::sin(heading), -std::cos(heading)};
  };
  straight(200.0);
  left_turn(30.0);
  straight(100.0);
  left_turn(50.0);
  straight(200.0);
  left_turn(30.0);
  straight(100.0);
  left_turn(50.0);
  return Track(std::move(pts), half_width, true);
}

}  // namespace vdyn
