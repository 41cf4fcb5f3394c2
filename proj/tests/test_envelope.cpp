#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "synthetic.hpp"
#include "vdyn/envelope.hpp"
#include "vdyn/errors.hpp"
#include "vdyn/integrator_model.hpp"

using namespace vdyn;

namespace {

std::vector<Vec2> ellipse_points(double a, double b, int n, double noise = 0.0,
                                 std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-noise, noise);
  std::vector<Vec2> pts;
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * std::numbers::pi * (k + 0.5) / n;
    const double r = 1.0 + u(rng);
    pts.push_back({r * a * std::cos(t), r * b * std::sin(t)});
  }
  return pts;
}

// Rows scaled so that the largest |coefficient| is 1, offsets scaled alike.
std::array<double, 4> normalized_row(const std::array<double, 3>& a, double b) {
  const double s = std::max({std::fabs(a[0]), std::fabs(a[1]), std::fabs(a[2])});
  return {a[0] / s, a[1] / s, a[2] / s, b / s};
}

const std::vector<double> kSpeeds{5, 10, 15, 20, 25, 30, 35, 40};

}  // namespace

TEST(Envelope, ReferenceConstants) {
  const EnvelopeModel env = reference_envelope();
  EXPECT_NO_THROW(check_invariants(env));
  EXPECT_NEAR(env.ax_max(20.0), 4.12, 1e-12);
  EXPECT_NEAR(env.ax_min(20.0), -9.272, 1e-12);
}

TEST(Envelope, InvariantViolationsThrow) {
  EnvelopeModel env = reference_envelope();
  env.alpha = 0.0;
  EXPECT_THROW(check_invariants(env), FitError);
  env = reference_envelope();
  env.b[4] = -0.1;
  EXPECT_THROW(check_invariants(env), FitError);
  env = reference_envelope();
  env.ax_max_poly = {0.5, -0.1};
  EXPECT_THROW(check_invariants(env), FitError);
}

TEST(FitEllipse, ExactPointsRecovered) {
  const auto hull = convex_hull_2d(ellipse_points(9.4, 9.0, 400));
  const EllipseFit f = fit_ellipse(hull, default_crop_band(hull), 0.02);
  EXPECT_NEAR(f.alpha, 9.4, 1e-6);
  EXPECT_NEAR(f.beta, 9.0, 1e-6);
}

TEST(FitEllipse, UnitCircle) {
  const auto hull = convex_hull_2d(ellipse_points(1.0, 1.0, 100));
  const EllipseFit f = fit_ellipse(hull, default_crop_band(hull));
  EXPECT_NEAR(f.alpha, 1.0, 1e-9);
  EXPECT_NEAR(f.beta, 1.0, 1e-9);
}

TEST(FitEllipse, RadialNoiseWithinTwoPercent) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto hull = convex_hull_2d(ellipse_points(9.4, 9.0, 2000, 0.01, seed));
    const EllipseFit f = fit_ellipse(hull, default_crop_band(hull));
    EXPECT_NEAR(f.alpha, 9.4, 0.02 * 9.4);
    EXPECT_NEAR(f.beta, 9.0, 0.02 * 9.0);
  }
}

TEST(FitEllipse, TruncatedCapsExcluded) {
  auto pts = ellipse_points(9.4, 9.0, 720);
  for (auto& p : pts) p.x = std::clamp(p.x, -8.5, 4.0);
  const auto hull = convex_hull_2d(pts);
  const EllipseFit f = fit_ellipse(hull, default_crop_band(hull));
  EXPECT_NEAR(f.alpha, 9.4, 0.01 * 9.4);
  EXPECT_NEAR(f.beta, 9.0, 0.01 * 9.0);
}

TEST(FitEllipse, Errors) {
  const std::vector<Vec2> upper{{-1, 0.1}, {0, 1}, {1, 0.1}, {0.5, 0.8}};
  EXPECT_THROW(fit_ellipse(upper, {-2, 2}), FitError);
  const auto hull = convex_hull_2d(ellipse_points(1.0, 1.0, 8));
  EXPECT_THROW(fit_ellipse(hull, {-0.05, 0.05}), FitError);
}

TEST(FitHalfspaces, ReferencePolytopeRecovered) {
  const EnvelopeModel ref = reference_envelope();
  const auto cloud = vdyn::testing::envelope_cloud(ref, kSpeeds, 20000, 3);
  const Halfspaces h = fit_halfspaces(cloud);
  for (std::size_t r = 0; r < 6; ++r) {
    const auto got = normalized_row(h.A[r], h.b[r]);
    const auto want = normalized_row(ref.A[r], ref.b[r]);
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_NEAR(got[j], want[j], 0.05 * std::max(1.0, std::fabs(want[j])))
          << "row " << r + 1 << " entry " << j;
  }
}

TEST(FitHalfspaces, ContainsCalibrationSamples) {
  const auto cloud = vdyn::testing::envelope_cloud(reference_envelope(), kSpeeds, 5000, 4);
  const Halfspaces h = fit_halfspaces(cloud);
  std::size_t inside = 0;
  for (const auto& s : cloud) {
    bool ok = true;
    for (std::size_t r = 0; r < 6; ++r)
      ok = ok && h.A[r][0] * s.a_X + h.A[r][1] * s.a_Y + h.A[r][2] * s.a_psi <= h.b[r];
    inside += ok;
  }
  EXPECT_GE(static_cast<double>(inside), 0.995 * static_cast<double>(cloud.size()));
}

TEST(FitHalfspaces, AxisAlignedBoxHasZeroSlopes) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<AccelSample> box(20000);
  for (auto& s : box) {
    s.a_X = 4.0 * u(rng);
    s.a_Y = 3.0 * u(rng);
    s.a_psi = 2.0 * u(rng);
  }
  const Halfspaces h = fit_halfspaces(box);
  EXPECT_NEAR(h.A[0][0], 0.0, 0.02);
  EXPECT_NEAR(h.A[1][0], 0.0, 0.02);
  // One family constrains a_psi alone, the other a_Y alone.
  EXPECT_NEAR(h.A[2][1], 0.0, 0.02);
  EXPECT_DOUBLE_EQ(h.A[2][2], 1.0);
  EXPECT_DOUBLE_EQ(h.A[4][1], 1.0);
  EXPECT_NEAR(h.A[4][2], 0.0, 0.02);
  EXPECT_NEAR(h.b[2], 2.0, 0.05);
  EXPECT_NEAR(h.b[4], 3.0, 0.05);
}

TEST(FitHalfspaces, RowsComeInPairs) {
  const auto cloud = vdyn::testing::envelope_cloud(reference_envelope(), kSpeeds, 2000, 6);
  const Halfspaces h = fit_halfspaces(cloud);
  EXPECT_EQ(h.A[0][0], h.A[1][0]);
  EXPECT_EQ(h.A[0][1], -h.A[1][1]);
  for (std::size_t r : {2u, 4u})
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(h.A[r][j], -h.A[r + 1][j]);
}

TEST(FitHalfspaces, TooFewSamplesThrow) {
  EXPECT_THROW(fit_halfspaces(std::vector<AccelSample>(2)), FitError);
}

TEST(FitAxBounds, ReferencePolynomialsExact) {
  const EnvelopeModel ref = reference_envelope();
  std::map<double, std::vector<AccelSample>> by_speed;
  for (double v : kSpeeds) {
    auto& list = by_speed[v];
    for (int i = 0; i <= 100; ++i) {
      AccelSample s;
      s.a_X = ref.ax_min(v) + (ref.ax_max(v) - ref.ax_min(v)) * i / 100.0;
      list.push_back(s);
    }
  }
  // q = 1 selects the exact extremes.
  const AxBounds b = fit_ax_bounds(by_speed, 1.0);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(b.ax_min_poly[j], ref.ax_min_poly[j], 1e-9);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(b.ax_max_poly[j], ref.ax_max_poly[j], 1e-9);
}

TEST(FitAxBounds, SpeedIndependentExtremes) {
  std::map<double, std::vector<AccelSample>> by_speed;
  for (double v : kSpeeds) {
    AccelSample lo, hi;
    lo.a_X = -8.0;
    hi.a_X = 3.0;
    by_speed[v] = {lo, hi};
  }
  const AxBounds b = fit_ax_bounds(by_speed, 1.0);
  EXPECT_NEAR(b.ax_min_poly[0], -8.0, 1e-9);
  EXPECT_NEAR(b.ax_min_poly[1], 0.0, 1e-9);
  EXPECT_NEAR(b.ax_min_poly[2], 0.0, 1e-9);
  EXPECT_NEAR(b.ax_max_poly[0], 3.0, 1e-9);
  EXPECT_NEAR(b.ax_max_poly[1], 0.0, 1e-9);
}

TEST(FitAxBounds, TooFewSpeedsThrow) {
  std::map<double, std::vector<AccelSample>> by_speed{{5.0, {AccelSample{}}},
                                                      {10.0, {AccelSample{}}}};
  EXPECT_THROW(fit_ax_bounds(by_speed), FitError);
}

TEST(UpperQuantile, NearestRank) {
  std::vector<double> v;
  for (int i = 1; i <= 1000; ++i) v.push_back(i);
  EXPECT_EQ(upper_quantile(v, 0.999), 999.0);
  EXPECT_EQ(upper_quantile(v, 1.0), 1000.0);
  EXPECT_EQ(upper_quantile(v, 0.5), 500.0);
  EXPECT_THROW(upper_quantile({}, 0.5), FitError);
}

TEST(BuildEnvelope, ReferenceCloudReproducesConstants) {
  const EnvelopeModel ref = reference_envelope();
  const auto cloud = vdyn::testing::envelope_cloud(ref, kSpeeds, 20000, 7);
  const EnvelopeModel env = build_envelope(cloud);
  EXPECT_NEAR(env.alpha, ref.alpha, 0.01 * ref.alpha);
  EXPECT_NEAR(env.beta, ref.beta, 0.01 * ref.beta);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(env.ax_min_poly[j], ref.ax_min_poly[j], 1e-6);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(env.ax_max_poly[j], ref.ax_max_poly[j], 1e-6);
  for (std::size_t r = 0; r < 6; ++r) {
    const auto got = normalized_row(env.A[r], env.b[r]);
    const auto want = normalized_row(ref.A[r], ref.b[r]);
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_NEAR(got[j], want[j], 0.05 * std::max(1.0, std::fabs(want[j])));
  }
  // The origin stays strictly feasible over the calibrated range.
  for (double v = env.v_min; v <= env.v_max; v += 0.5)
    EXPECT_TRUE(is_feasible(env, {0.0, 0.0, 0.0}, v, -1e-6).feasible) << v;
}

TEST(BuildEnvelope, SoundOnCalibrationSamples) {
  const auto cloud = vdyn::testing::envelope_cloud(reference_envelope(), kSpeeds, 5000, 8);
  const EnvelopeModel env = build_envelope(cloud);
  std::size_t inside = 0;
  for (const auto& s : cloud) inside += is_feasible(env, {s.a_X, s.a_Y, s.a_psi}, s.v_x0, 1e-9).feasible;
  EXPECT_GE(static_cast<double>(inside), 0.99 * static_cast<double>(cloud.size()));
}

TEST(BuildEnvelope, EmptyInputThrows) {
  EXPECT_THROW(build_envelope(std::vector<AccelSample>{}), FitError);
}

TEST(BuildEnvelope, ErrorsNameTheStage) {
  auto cloud = vdyn::testing::envelope_cloud(reference_envelope(), {10.0, 20.0}, 500, 9);
  try {
    build_envelope(cloud);
    FAIL() << "expected FitError";
  } catch (const FitError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("a_X bounds: ", 0), 0u) << e.what();
  }
}

TEST(BuildEnvelope, MissingCsvNamesTheFile) {
  try {
    build_envelope(std::vector<std::string>{"/nonexistent/samples.csv"});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/samples.csv"), std::string::npos);
  }
}

TEST(EnvelopeJson, RoundTripIsBitwise) {
  EnvelopeModel env = build_envelope(vdyn::testing::envelope_cloud(reference_envelope(), kSpeeds, 1000, 10));
  std::stringstream ss;
  save_envelope(ss, env);
  const EnvelopeModel back = load_envelope(ss, "mem");
  EXPECT_TRUE(back == env);
}

TEST(EnvelopeJson, DocumentKeys) {
  std::stringstream ss;
  save_envelope(ss, reference_envelope());
  const std::string text = ss.str();
  for (const char* key : {"\"schema_version\"", "\"alpha\"", "\"beta\"", "\"A\"", "\"b\"",
                          "\"ax_min_poly\"", "\"ax_max_poly\"", "\"units\""})
    EXPECT_NE(text.find(key), std::string::npos) << key;
}

TEST(EnvelopeJson, RejectsBadDocuments) {
  std::stringstream missing(R"({"schema_version": 1, "alpha": 9.4})");
  EXPECT_THROW(load_envelope(missing, "m"), ConfigError);
  std::stringstream version(R"({"schema_version": 99})");
  EXPECT_THROW(load_envelope(version, "v"), ConfigError);
  std::stringstream garbage("not json");
  EXPECT_THROW(load_envelope(garbage, "g"), ConfigError);

  std::stringstream ss;
  EnvelopeModel env = reference_envelope();
  env.beta = -1.0;
  save_envelope(ss, env);
  EXPECT_THROW(load_envelope(ss, "neg"), ConfigError);
}

TEST(EnvelopeJson, ReferenceFileMatchesConstants) {
  const auto path = std::filesystem::path(VDYN_SOURCE_DIR) / "configs" / "reference_envelope.json";
  EXPECT_TRUE(load_envelope(path.string()) == reference_envelope());
}
