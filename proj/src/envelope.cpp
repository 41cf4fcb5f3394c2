#include "vdyn/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "json.hpp"
#include "vdyn/csv.hpp"
#include "vdyn/errors.hpp"

namespace vdyn {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
// Upper-chain edges closer than this to vertical belong to the a_X box.
constexpr double kVerticalExclusion = 10.0 * kDeg;
// Halfspace normals further than this from the a_psi axis are scaled on a_Y.
constexpr double kPsiNormalization = 75.0 * kDeg;

template <std::size_t N>
std::array<double, N> polyfit(std::span<const double> x, std::span<const double> y) {
  if (x.size() < N) throw FitError("polynomial fit needs at least " + std::to_string(N) + " speeds");
  Eigen::MatrixXd V(x.size(), N);
  Eigen::VectorXd rhs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double p = 1.0;
    for (std::size_t j = 0; j < N; ++j) {
      V(i, j) = p;
      p *= x[i];
    }
    rhs(i) = y[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
  if (qr.rank() < static_cast<Eigen::Index>(N)) throw FitError("polynomial fit is rank deficient");
  Eigen::VectorXd c = qr.solve(rhs);
  std::array<double, N> out{};
  for (std::size_t j = 0; j < N; ++j) out[j] = c(j);
  return out;
}

// Angle of an undirected line, in [0, pi).
double axial_angle(Vec2 d) {
  double a = std::atan2(d.y, d.x);
  if (a < 0.0) a += std::numbers::pi;
  if (a >= std::numbers::pi) a -= std::numbers::pi;
  return a;
}

double axial_distance(double a, double b) {
  const double d = std::fabs(a - b);
  return std::min(d, std::numbers::pi - d);
}

struct Edge {
  Vec2 a;
  Vec2 b;
  double angle = 0.0;
  double length = 0.0;
};

std::vector<Edge> hull_edges(const std::vector<Vec2>& hull) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    Edge e{hull[i], hull[(i + 1) % hull.size()]};
    e.angle = axial_angle(e.b - e.a);
    e.length = norm(e.b - e.a);
    edges.push_back(e);
  }
  return edges;
}

// Length-weighted mean of undirected angles (doubled-angle average).
double mean_axial(const std::vector<const Edge*>& edges) {
  double c = 0.0, s = 0.0;
  for (const Edge* e : edges) {
    c += e->length * std::cos(2.0 * e->angle);
    s += e->length * std::sin(2.0 * e->angle);
  }
  return axial_angle({std::cos(0.5 * std::atan2(s, c)), std::sin(0.5 * std::atan2(s, c))});
}

// Orthogonal least-squares direction shared by several parallel point groups.
double pooled_direction(const std::vector<std::vector<Vec2>>& groups) {
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) continue;
    Vec2 m{};
    for (Vec2 p : g) m = m + p;
    m = (1.0 / static_cast<double>(g.size())) * m;
    for (Vec2 p : g) {
      const Vec2 d = p - m;
      sxx += d.x * d.x;
      syy += d.y * d.y;
      sxy += d.x * d.y;
    }
  }
  const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  return axial_angle({std::cos(theta), std::sin(theta)});
}

void add_unique(std::vector<Vec2>& pts, Vec2 p) {
  if (std::find(pts.begin(), pts.end(), p) == pts.end()) pts.push_back(p);
}

// Slope k of the k a_X + |a_Y| rows from the longest straight run of the
// upper-right hull chain in the folded (a_X, |a_Y|) plane.
double coupling_slope(std::span<const AccelSample> samples, double tol) {
  std::vector<Vec2> folded;
  folded.reserve(samples.size());
  for (const auto& s : samples) folded.push_back({s.a_X, std::fabs(s.a_Y)});
  const auto hull = convex_hull_2d(std::move(folded));

  std::size_t r = 0, t = 0;
  for (std::size_t i = 1; i < hull.size(); ++i) {
    if (hull[i].x > hull[r].x || (hull[i].x == hull[r].x && hull[i].y > hull[r].y)) r = i;
    if (hull[i].y > hull[t].y || (hull[i].y == hull[t].y && hull[i].x > hull[t].x)) t = i;
  }
  std::vector<Edge> chain;
  for (std::size_t i = r; i != t; i = (i + 1) % hull.size()) {
    Edge e{hull[i], hull[(i + 1) % hull.size()]};
    e.angle = axial_angle(e.b - e.a);
    e.length = norm(e.b - e.a);
    if (axial_distance(e.angle, 0.5 * std::numbers::pi) < kVerticalExclusion) continue;
    chain.push_back(e);
  }

  std::vector<const Edge*> best, run;
  double best_len = 0.0, run_len = 0.0;
  auto close_run = [&] {
    if (run_len > best_len) {
      best = run;
      best_len = run_len;
    }
    run.clear();
    run_len = 0.0;
  };
  for (const Edge& e : chain) {
    if (!run.empty() && axial_distance(e.angle, mean_axial(run)) > tol) close_run();
    if (!run.empty() && run.back()->b != e.a) close_run();
    run.push_back(&e);
    run_len += e.length;
  }
  close_run();
  if (best.empty()) return 0.0;

  std::vector<Vec2> pts;
  for (const Edge* e : best) {
    add_unique(pts, e->a);
    add_unique(pts, e->b);
  }
  const double theta = pooled_direction({pts});
  // Normal (-sin, cos) oriented towards +|a_Y|.
  double nx = -std::sin(theta), ny = std::cos(theta);
  if (ny < 0.0) {
    nx = -nx;
    ny = -ny;
  }
  if (ny < std::cos(90.0 * kDeg - kVerticalExclusion)) return 0.0;
  return std::max(0.0, nx / ny);
}

struct Family {
  double angle = 0.0;
  std::array<double, 2> row{};  // coefficients on (a_Y, a_psi)
  bool psi_normalized = true;
};

std::vector<const Edge*> members_near(const std::vector<Edge>& edges, double center,
                                      double tol) {
  std::vector<const Edge*> out;
  for (const Edge& e : edges)
    if (axial_distance(e.angle, center) <= tol) out.push_back(&e);
  return out;
}

Family fit_family(const std::vector<Edge>& edges, double seed_angle, double tol,
                  Vec2 centroid) {
  auto members = members_near(edges, seed_angle, tol);
  const double center = mean_axial(members);
  members = members_near(edges, center, tol);

  const Vec2 n0{-std::sin(center), std::cos(center)};
  std::vector<std::vector<Vec2>> sides(2);
  for (const Edge* e : members) {
    const Vec2 mid = 0.5 * (e->a + e->b);
    auto& side = sides[dot(n0, mid - centroid) >= 0.0 ? 0 : 1];
    add_unique(side, e->a);
    add_unique(side, e->b);
  }
  Family f;
  f.angle = pooled_direction(sides);
  const double nY = -std::sin(f.angle), nP = std::cos(f.angle);
  if (std::fabs(nP) >= std::cos(kPsiNormalization)) {
    f.row = {nY / nP, 1.0};
  } else {
    f.row = {1.0, nP / nY};
    f.psi_normalized = false;
  }
  return f;
}

double lower_quantile(std::vector<double> values, double q) {
  for (double& v : values) v = -v;
  return -upper_quantile(std::move(values), q);
}

}  // namespace

double EnvelopeModel::ax_min(double v_x) const {
  const double v = std::clamp(v_x, v_min, v_max);
  return ax_min_poly[0] + v * (ax_min_poly[1] + v * ax_min_poly[2]);
}

double EnvelopeModel::ax_max(double v_x) const {
  const double v = std::clamp(v_x, v_min, v_max);
  return ax_max_poly[0] + v * ax_max_poly[1];
}

EnvelopeModel reference_envelope() {
  EnvelopeModel env;
  env.alpha = 9.4;
  env.beta = 9.0;
  env.A = {{{2.6, 1.0, 0.0},
            {2.6, -1.0, 0.0},
            {0.0, 1.1, 1.0},
            {0.0, -1.1, -1.0},
            {0.0, -0.57, 1.0},
            {0.0, 0.57, -1.0}}};
  env.b = {15.3, 15.3, 9.9, 9.9, 5.1, 5.1};
  env.ax_min_poly = {-9.3, -0.013, 0.00072};
  env.ax_max_poly = {4.3, -0.009};
  return env;
}

void check_invariants(const EnvelopeModel& env) {
  if (!(env.alpha > 0.0) || !(env.beta > 0.0))
    throw FitError("envelope semi-axes must be positive");
  if (!(env.v_max > env.v_min)) throw FitError("envelope speed range is empty");
  for (std::size_t i = 0; i < env.b.size(); ++i)
    if (!(env.b[i] > 0.0))
      throw FitError("origin is not strictly inside halfspace row " + std::to_string(i + 1));
  for (int k = 0; k <= 100; ++k) {
    const double v = env.v_min + (env.v_max - env.v_min) * k / 100.0;
    if (!(env.ax_min(v) < 0.0) || !(env.ax_max(v) > 0.0))
      throw FitError("a_X bounds do not bracket zero at v_x = " + std::to_string(v));
  }
}

CropBand default_crop_band(std::span<const Vec2> hull, double fraction) {
  if (hull.empty()) throw FitError("empty hull");
  auto [lo, hi] = std::minmax_element(hull.begin(), hull.end(),
                                      [](Vec2 a, Vec2 b) { return a.x < b.x; });
  return {fraction * lo->x, fraction * hi->x};
}

EllipseFit fit_ellipse(std::span<const Vec2> hull, CropBand band, double trim) {
  bool pos = false, neg = false;
  std::vector<Vec2> pts;
  for (Vec2 p : hull) {
    pos = pos || p.y > 0.0;
    neg = neg || p.y < 0.0;
    if (p.x >= band.lo && p.x <= band.hi) pts.push_back(p);
  }
  if (!pos || !neg) throw FitError("ellipse fit needs hull vertices on both sides of a_Y = 0");

  double p = 0.0, q = 0.0;
  for (int iter = 0; iter < 20; ++iter) {
    if (pts.size() < 4)
      throw FitError("ellipse fit needs at least 4 vertices in the crop band, got " +
                     std::to_string(pts.size()));
    // Linear least squares in (1/alpha^2, 1/beta^2).
    double sxx = 0.0, sxy = 0.0, syy = 0.0, bx = 0.0, by = 0.0;
    for (Vec2 v : pts) {
      const double u = v.x * v.x, w = v.y * v.y;
      sxx += u * u;
      sxy += u * w;
      syy += w * w;
      bx += u;
      by += w;
    }
    const double det = sxx * syy - sxy * sxy;
    if (!(std::fabs(det) > 1e-300)) throw FitError("ellipse fit is degenerate");
    p = (bx * syy - by * sxy) / det;
    q = (by * sxx - bx * sxy) / det;
    if (!(p > 0.0) || !(q > 0.0)) throw FitError("ellipse fit produced non-positive axes");

    std::vector<Vec2> kept;
    for (Vec2 v : pts)
      if (std::sqrt(p * v.x * v.x + q * v.y * v.y) >= 1.0 - trim) kept.push_back(v);
    if (kept.size() == pts.size() || kept.size() < 4) break;
    pts = std::move(kept);
  }
  return {1.0 / std::sqrt(p), 1.0 / std::sqrt(q), pts.size()};
}

double upper_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw FitError("quantile of an empty set");
  const double rank = std::ceil(q * static_cast<double>(values.size()) - 1e-9);
  const auto k = static_cast<std::size_t>(
      std::clamp(rank, 1.0, static_cast<double>(values.size()))) - 1;
  std::nth_element(values.begin(), values.begin() + k, values.end());
  return values[k];
}

Halfspaces fit_halfspaces(std::span<const AccelSample> samples, const HalfspaceOptions& opt) {
  if (samples.size() < 3) throw FitError("halfspace fit needs samples");
  const double tol = opt.run_tolerance_deg * kDeg;

  const double k = coupling_slope(samples, tol);

  std::vector<Vec2> yp;
  yp.reserve(samples.size());
  for (const auto& s : samples) yp.push_back({s.a_Y, s.a_psi});
  const auto hull = convex_hull_2d(std::move(yp));
  const auto edges = hull_edges(hull);
  Vec2 centroid{};
  for (Vec2 v : hull) centroid = centroid + v;
  centroid = (1.0 / static_cast<double>(hull.size())) * centroid;

  auto score = [&](const Edge& e) {
    double s = 0.0;
    for (const Edge& f : edges)
      if (axial_distance(e.angle, f.angle) <= tol) s += f.length;
    return s;
  };
  const Edge* first = nullptr;
  double first_score = -1.0;
  for (const Edge& e : edges) {
    const double s = score(e);
    if (s > first_score) {
      first_score = s;
      first = &e;
    }
  }
  const Family fam1 = fit_family(edges, first->angle, tol, centroid);
  const Edge* second = nullptr;
  double second_score = -1.0;
  for (const Edge& e : edges) {
    if (axial_distance(e.angle, fam1.angle) <= opt.family_separation_deg * kDeg) continue;
    const double s = score(e);
    if (s > second_score) {
      second_score = s;
      second = &e;
    }
  }
  if (second == nullptr)
    throw FitError("(a_Y, a_psi) hull has no second edge family for the parallelogram");
  Family fam2 = fit_family(edges, second->angle, tol, centroid);
  if (axial_distance(fam1.angle, fam2.angle) <= opt.family_separation_deg * kDeg)
    throw FitError("(a_Y, a_psi) hull edge families are not separated");

  std::array<Family, 2> fams{fam1, fam2};
  std::sort(fams.begin(), fams.end(), [](const Family& a, const Family& b) {
    if (a.psi_normalized != b.psi_normalized) return a.psi_normalized;
    return a.row[0] > b.row[0];
  });

  Halfspaces h;
  h.A[0] = {k, 1.0, 0.0};
  h.A[1] = {k, -1.0, 0.0};
  for (std::size_t f = 0; f < 2; ++f) {
    h.A[2 + 2 * f] = {0.0, fams[f].row[0], fams[f].row[1]};
    h.A[3 + 2 * f] = {0.0, -fams[f].row[0], -fams[f].row[1]};
  }
  // Each row keeps 1 - (1 - q)/6 of the samples so the polytope keeps q.
  const double q_row = 1.0 - (1.0 - opt.quantile) / 6.0;
  std::vector<double> proj(samples.size());
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t i = 0; i < samples.size(); ++i)
      proj[i] = h.A[r][0] * samples[i].a_X + h.A[r][1] * samples[i].a_Y +
                h.A[r][2] * samples[i].a_psi;
    h.b[r] = upper_quantile(proj, q_row);
  }
  return h;
}

AxBounds fit_ax_bounds(const std::map<double, std::vector<AccelSample>>& by_speed,
                       double quantile) {
  if (by_speed.size() < 3)
    throw FitError("a_X bound fit needs at least 3 speeds, got " + std::to_string(by_speed.size()));
  std::vector<double> v, lo, hi;
  for (const auto& [speed, samples] : by_speed) {
    if (samples.empty()) throw FitError("no samples at v_x0 = " + format_number(speed));
    std::vector<double> ax;
    ax.reserve(samples.size());
    for (const auto& s : samples) ax.push_back(s.a_X);
    v.push_back(speed);
    lo.push_back(lower_quantile(ax, quantile));
    hi.push_back(upper_quantile(std::move(ax), quantile));
  }
  return {polyfit<3>(v, lo), polyfit<2>(v, hi)};
}

EnvelopeModel build_envelope(std::span<const AccelSample> samples, const FitConfig& cfg) {
  if (samples.empty()) throw FitError("no samples to build an envelope from");
  std::map<double, std::vector<AccelSample>> by_speed;
  for (const auto& s : samples) by_speed[s.v_x0].push_back(s);

  EnvelopeModel env;
  env.v_min = cfg.v_min;
  env.v_max = cfg.v_max;
  try {
    const AxBounds ax = fit_ax_bounds(by_speed, cfg.ax_quantile);
    env.ax_min_poly = ax.ax_min_poly;
    env.ax_max_poly = ax.ax_max_poly;
  } catch (const FitError& e) {
    throw FitError(std::string("a_X bounds: ") + e.what());
  }
  try {
    std::vector<Vec2> pts;
    pts.reserve(samples.size());
    for (const auto& s : samples) pts.push_back({s.a_X, s.a_Y});
    const auto hull = convex_hull_2d(std::move(pts));
    const EllipseFit ell =
        fit_ellipse(hull, default_crop_band(hull, cfg.crop_fraction), cfg.ellipse_trim);
    env.alpha = ell.alpha;
    env.beta = ell.beta;
  } catch (const FitError& e) {
    throw FitError(std::string("ellipse: ") + e.what());
  }
  try {
    const Halfspaces h = fit_halfspaces(samples, cfg.halfspaces);
    env.A = h.A;
    env.b = h.b;
  } catch (const FitError& e) {
    throw FitError(std::string("halfspaces: ") + e.what());
  }
  check_invariants(env);
  return env;
}

EnvelopeModel build_envelope(const std::vector<std::string>& csv_paths, const FitConfig& cfg) {
  std::vector<AccelSample> pooled;
  for (const auto& path : csv_paths) {
    auto part = read_samples_csv(path);
    if (part.empty()) throw FitError(path + ": no samples");
    pooled.insert(pooled.end(), part.begin(), part.end());
  }
  return build_envelope(pooled, cfg);
}

void save_envelope(std::ostream& out, const EnvelopeModel& env) {
  nlohmann::ordered_json j;
  j["schema_version"] = kEnvelopeSchemaVersion;
  j["units"] = {{"alpha", "m/s^2"},
                {"beta", "m/s^2"},
                {"A", "rows act on [a_X m/s^2, a_Y m/s^2, a_psi rad/s^2]"},
                {"b", "m/s^2 (rows 1-2), rad/s^2 (rows 3-6)"},
                {"ax_min_poly", "m/s^2, powers of v_x in m/s, constant first"},
                {"ax_max_poly", "m/s^2, powers of v_x in m/s, constant first"}};
  j["alpha"] = env.alpha;
  j["beta"] = env.beta;
  j["A"] = env.A;
  j["b"] = env.b;
  j["ax_min_poly"] = env.ax_min_poly;
  j["ax_max_poly"] = env.ax_max_poly;
  j["v_range"] = {env.v_min, env.v_max};
  out << j.dump(2) << '\n';
}

void save_envelope(const std::string& path, const EnvelopeModel& env) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot open for writing");
  save_envelope(out, env);
  if (!out) throw ConfigError(path + ": write failed");
}

EnvelopeModel load_envelope(std::istream& in, const std::string& name) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(name + ": " + e.what());
  }
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw ConfigError(name + ": missing key '" + key + "'");
    return j.at(key);
  };
  EnvelopeModel env;
  try {
    const int version = need("schema_version").get<int>();
    if (version != kEnvelopeSchemaVersion)
      throw ConfigError(name + ": unsupported schema_version " + std::to_string(version));
    env.alpha = need("alpha").get<double>();
    env.beta = need("beta").get<double>();
    env.A = need("A").get<std::array<std::array<double, 3>, 6>>();
    env.b = need("b").get<std::array<double, 6>>();
    env.ax_min_poly = need("ax_min_poly").get<std::array<double, 3>>();
    env.ax_max_poly = need("ax_max_poly").get<std::array<double, 2>>();
    if (j.contains("v_range")) {
      const auto r = j.at("v_range").get<std::array<double, 2>>();
      env.v_min = r[0];
      env.v_max = r[1];
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(name + ": " + e.what());
  }
  try {
    check_invariants(env);
  } catch (const FitError& e) {
    throw ConfigError(name + ": " + e.what());
  }
  return env;
}

EnvelopeModel load_envelope(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  return load_envelope(in, path);
}

}  // namespace vdyn
