// Invariants over seeded random instances. Every TEST_P below runs once per
// seed in [0, kSeeds).
#include <algorithm>
#include <cstring>
#include <map>
#include <optional>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "aggmorph/json_io.h"
#include "aggmorph/marker_registration.h"
#include "aggmorph/mask_io.h"
#include "aggmorph/masked_sfm.h"
#include "aggmorph/mesh_io.h"
#include "aggmorph/morphometry.h"
#include "aggmorph/pipeline.h"
#include "aggmorph/shapes.h"
#include "aggmorph/silhouette.h"
#include "aggmorph/text_format.h"
#include "test_util.h"

namespace aggmorph {
namespace {

constexpr int kSeeds = 100;
constexpr double kPi = std::numbers::pi;

class Seeded : public ::testing::TestWithParam<int> {
 protected:
  uint64_t seed() const { return static_cast<uint64_t>(GetParam()); }
  std::mt19937_64& rng() {
    if (!rng_) rng_.emplace(0x5eed0000ULL + seed());
    return *rng_;
  }
  double Uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }
  int UniformInt(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng()); }
  Vec3 RandomVec(double lo, double hi) { return Vec3(Uniform(lo, hi), Uniform(lo, hi), Uniform(lo, hi)); }

  // Convex particle: hull of random points in a random box.
  TriangleMesh RandomConvexMesh() {
    const Vec3 half = RandomVec(0.5, 3.0);
    return ConvexHull(testing::RandomPoints(UniformInt(12, 40), rng()(), half));
  }

 private:
  std::optional<std::mt19937_64> rng_;
};

double Rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// --- mesh geometry -------------------------------------------------------

using MeshProperty = Seeded;

TEST_P(MeshProperty, RigidInvariance) {
  const TriangleMesh m = RandomConvexMesh();
  const TriangleMesh moved = TransformMesh(m, RandomRotation(seed()), RandomVec(-10, 10));
  EXPECT_LE(Rel(SignedVolume(moved), SignedVolume(m)), 1e-9);
  EXPECT_LE(Rel(SurfaceArea(moved), SurfaceArea(m)), 1e-9);
  const OrientedBox a = MinVolumeObb(m.vertices);
  const OrientedBox b = MinVolumeObb(moved.vertices);
  for (int k = 0; k < 3; ++k) EXPECT_LE(Rel(b.extents[k], a.extents[k]), 1e-9) << k;
}

TEST_P(MeshProperty, ScalingLaw) {
  const TriangleMesh m = RandomConvexMesh();
  const double s = Uniform(0.1, 20);
  const TriangleMesh scaled = TransformMesh(m, Mat3::Identity(), Vec3::Zero(), s);
  const ShapeMetrics3d a = AnalyzeMesh(m);
  const ShapeMetrics3d b = AnalyzeMesh(scaled);
  EXPECT_LE(Rel(b.volume, s * s * s * a.volume), 1e-9);
  EXPECT_LE(Rel(b.area, s * s * a.area), 1e-9);
  EXPECT_LE(Rel(b.a, s * a.a), 1e-9);
  EXPECT_LE(Rel(b.b, s * a.b), 1e-9);
  EXPECT_LE(Rel(b.c, s * a.c), 1e-9);
  EXPECT_LE(Rel(b.fer_3d, a.fer_3d), 1e-9);
  EXPECT_LE(Rel(b.sphericity, a.sphericity), 1e-9);
}

TEST_P(MeshProperty, SphericityAtMostOne) {
  const TriangleMesh hull = RandomConvexMesh();
  EXPECT_LE(Sphericity3d(SignedVolume(hull), SurfaceArea(hull)), 1 + 1e-9);
  const TriangleMesh e = MakeEllipsoid(RandomVec(0.2, 5), UniformInt(0, 3));
  EXPECT_LE(Sphericity3d(SignedVolume(e), SurfaceArea(e)), 1 + 1e-9);
}

TEST_P(MeshProperty, BoxEnclosesHull) {
  const std::vector<Vec3> pts = testing::RandomPoints(UniformInt(8, 60), seed(), RandomVec(0.3, 4));
  const TriangleMesh hull = ConvexHull(pts);
  const OrientedBox box = MinVolumeObb(pts);
  const double scale = CaliperDiameter(pts);
  EXPECT_GE(box.volume(), SignedVolume(hull) - 1e-9 * scale * scale * scale);
  for (const Vec3& p : pts) EXPECT_TRUE(box.Contains(p, 1e-9 * scale));
  EXPECT_LE(box.extents[0], box.extents[1]);
  EXPECT_LE(box.extents[1], box.extents[2]);
}

TEST_P(MeshProperty, ElongationDominatesAxisRatios) {
  const OrientedBox box = MinVolumeObb(RandomConvexMesh().vertices);
  const double fer = Fer3d(box);
  EXPECT_GE(fer, box.extents[2] / box.extents[1]);
  EXPECT_GE(fer, box.extents[1] / box.extents[0]);
}

TEST_P(MeshProperty, HullIsValidAndContainsInput) {
  const std::vector<Vec3> pts = testing::RandomPoints(UniformInt(5, 200), seed() + 1000, RandomVec(0.1, 5));
  const TriangleMesh hull = ConvexHull(pts);
  EXPECT_NO_THROW(ValidateMesh(hull));
  EXPECT_TRUE(IsConsistentlyOriented(hull));
  EXPECT_GT(SignedVolume(hull), 0);
  EXPECT_LE(testing::MaxHalfSpaceViolation(hull, pts), 1e-9 * CaliperDiameter(pts));
}

TEST_P(MeshProperty, CaliperDiameterMatchesPairwise) {
  const std::vector<Vec3> pts = testing::RandomPoints(UniformInt(2, 150), seed() + 2000, RandomVec(0.1, 5));
  EXPECT_EQ(CaliperDiameter(pts), testing::BrutePairwiseDiameter(pts));
}

INSTANTIATE_TEST_SUITE_P(Seeds, MeshProperty, ::testing::Range(0, kSeeds));

// --- silhouettes ---------------------------------------------------------

class SilhouetteProperty : public Seeded {
 protected:
  // Star-shaped about the origin; stratified angles keep every gap below pi,
  // so the polygon is simple.
  SilhouettePolygon RandomStar() {
    const int n = UniformInt(5, 60);
    SilhouettePolygon p;
    for (int i = 0; i < n; ++i) {
      const double t = 2 * kPi * (i + Uniform(0, 1)) / n;
      const double r = Uniform(0.2, 3);
      p.vertices.emplace_back(r * std::cos(t), r * std::sin(t));
    }
    return p;
  }
  SilhouettePolygon RandomConvexPolygon() {
    SilhouettePolygon p;
    const int n = UniformInt(3, 40);
    for (int i = 0; i < n; ++i) {
      const double t = 2 * kPi * (i + Uniform(0.1, 0.9)) / n;
      p.vertices.emplace_back(std::cos(t), 0.6 * std::sin(t));
    }
    return p;
  }
};

TEST_P(SilhouetteProperty, SimilarityInvariance) {
  SilhouettePolygon p = RandomConvexPolygon();
  // Convex polygons keep a well-separated Feret chord, so the chosen
  // direction is stable under the transform.
  const double angle = Uniform(0, 2 * kPi);
  const double s = Uniform(0.01, 100);
  const Vec2 t(Uniform(-50, 50), Uniform(-50, 50));
  const Eigen::Rotation2Dd R(angle);
  SilhouettePolygon q;
  for (const Vec2& v : p.vertices) q.vertices.push_back(s * (R * v) + t);
  const ViewMetrics a = AnalyzeSilhouette(p);
  const ViewMetrics b = AnalyzeSilhouette(q);
  EXPECT_LE(Rel(b.fer_2d, a.fer_2d), 1e-9);
  EXPECT_LE(Rel(b.circularity, a.circularity), 1e-9);
}

TEST_P(SilhouetteProperty, IsoperimetricAndElongationBounds) {
  const SilhouettePolygon p = RandomStar();
  const ViewMetrics m = AnalyzeSilhouette(p);
  EXPECT_LE(m.circularity, 1 + 1e-9);
  EXPECT_GE(m.fer_2d, 1);
}

TEST_P(SilhouetteProperty, MaxFeretIsBestVertexPair) {
  const SilhouettePolygon p = RandomStar();
  double brute = 0;
  for (const Vec2& a : p.vertices)
    for (const Vec2& b : p.vertices) brute = std::max(brute, (a - b).norm());
  EXPECT_EQ(MaxFeret(p).length, brute);
}

TEST_P(SilhouetteProperty, SilhouetteFeretBoundedByCaliperDiameter) {
  const TriangleMesh m = RandomConvexMesh();
  const ViewCamera cam = TurntableView(m, Uniform(0, 360), Uniform(-80, 80), 128);
  const SilhouettePolygon poly = TraceBoundary(RenderSilhouette(m, cam));
  EXPECT_LE(MaxFeret(poly).length, CaliperDiameter(m.vertices) + 2 * cam.pixel_pitch);
}

TEST_P(SilhouetteProperty, RenderedAreaMatchesProjection) {
  const TriangleMesh m = RandomConvexMesh();
  const ViewCamera cam = TurntableView(m, Uniform(0, 360), Uniform(-80, 80), 512);
  const double traced = ComputePolygonMetrics(TraceBoundary(RenderSilhouette(m, cam))).area;
  // Analytic: area of the 2D hull of the projected vertices.
  const Vec3 z = cam.direction.normalized();
  const Vec3 x = z.unitOrthogonal();
  const Vec3 y = z.cross(x);
  std::vector<Vec3> flat;
  for (const Vec3& v : m.vertices) flat.emplace_back(v.dot(x), v.dot(y), 0);
  SilhouettePolygon proj;
  {
    std::vector<Vec2> pts;
    for (const Vec3& f : flat) pts.push_back(f.head<2>());
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
    std::vector<Vec2> h(2 * pts.size());
    size_t k = 0;
    auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
      return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    for (size_t i = 0; i < pts.size(); ++i) {
      while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
      h[k++] = pts[i];
    }
    for (size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
      while (k >= t && cross(h[k - 2], h[k - 1], pts[i - 1]) <= 0) --k;
      h[k++] = pts[i - 1];
    }
    h.resize(k - 1);
    proj.vertices = h;
  }
  EXPECT_NEAR(traced / SignedArea(proj), 1, 0.02);
}

INSTANTIATE_TEST_SUITE_P(Seeds, SilhouetteProperty, ::testing::Range(0, kSeeds));

// --- markers and registration --------------------------------------------

class RegistrationProperty : public Seeded {
 protected:
  SimilarityTransform RandomSimilarity() {
    SimilarityTransform t;
    t.rotation = RandomRotation(rng()());
    t.translation = RandomVec(-20, 20);
    t.scale = std::exp(Uniform(-3, 3));
    return t;
  }
  CameraParams LookAt(const Vec3& center) {
    const Vec3 z = -center.normalized();
    const Vec3 x = z.unitOrthogonal();
    const Vec3 y = z.cross(x);
    Mat3 R;
    R.row(0) = x;
    R.row(1) = y;
    R.row(2) = z;
    CameraParams c;
    c.focal = Uniform(500, 1500);
    c.principal = Vec2(512, 512);
    c.rotation = RotationToAxisAngle(R);
    c.translation = -R * center;
    return c;
  }
};

TEST_P(RegistrationProperty, ExactSimilarityRecovery) {
  const int n = UniformInt(3, 25);
  std::vector<Vec3> src;
  for (int i = 0; i < n; ++i) src.push_back(RandomVec(-5, 5));
  const SimilarityTransform t = RandomSimilarity();
  const SimilarityEstimate e = EstimateSimilarity(src, ApplySimilarity(t, src));
  EXPECT_LT((e.transform.rotation - t.rotation).norm(), 1e-9);
  EXPECT_LT(Rel(e.transform.scale, t.scale), 1e-9);
  EXPECT_NEAR(e.transform.rotation.determinant(), 1, 1e-12);
}

TEST_P(RegistrationProperty, LeastSquaresResidualIsOptimal) {
  const int n = UniformInt(4, 20);
  std::vector<Vec3> src, dst;
  const SimilarityTransform t = RandomSimilarity();
  std::normal_distribution<double> noise(0, 0.05);
  for (int i = 0; i < n; ++i) {
    src.push_back(RandomVec(-3, 3));
    dst.push_back(t(src.back()) + Vec3(noise(rng()), noise(rng()), noise(rng())) * t.scale);
  }
  const SimilarityEstimate e = EstimateSimilarity(src, dst);
  auto rms = [&](const SimilarityTransform& x) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += (x(src[i]) - dst[i]).squaredNorm();
    return std::sqrt(s / n);
  };
  const double best = rms(e.transform);
  EXPECT_NEAR(best, e.rms, 1e-9 * (1 + best));
  for (int k = 0; k < 100; ++k) {
    SimilarityTransform p = e.transform;
    const double eps = 1e-3;
    p.rotation = Eigen::AngleAxisd(eps * Uniform(0.1, 1), RandomVec(-1, 1).normalized()).toRotationMatrix() * p.rotation;
    p.translation += eps * t.scale * RandomVec(-1, 1);
    p.scale *= 1 + eps * Uniform(-1, 1);
    EXPECT_GE(rms(p), best * (1 - 1e-12));
  }
}

TEST_P(RegistrationProperty, CalibrationScalesVolumeAndKeepsRatios) {
  const TriangleMesh m = RandomConvexMesh();
  const double s = Uniform(0.5, 40);
  const ShapeMetrics3d local = AnalyzeMesh(m);
  const ShapeMetrics3d physical = AnalyzeMesh(TransformMesh(m, Mat3::Identity(), Vec3::Zero(), s));
  EXPECT_LE(Rel(physical.volume, s * s * s * local.volume), 1e-9);
  EXPECT_LE(Rel(physical.fer_3d, local.fer_3d), 1e-9);
  const ShapeMetrics3d converted = ScaleShapeMetrics(local, s);
  EXPECT_EQ(converted.fer_3d, local.fer_3d);
  EXPECT_EQ(converted.sphericity, local.sphericity);
}

TEST_P(RegistrationProperty, ExactPixelsTriangulateExactly) {
  const int views = UniformInt(2, 6);
  std::map<int, AnnotatedView> cams;
  const Vec3 X = RandomVec(-1, 1);
  std::vector<MarkerAnnotation> ann;
  for (int v = 0; v < views; ++v) {
    const double az = 2 * kPi * v / views + Uniform(0, 0.3);
    const double el = Uniform(0.3, 0.8);
    const CameraParams c = LookAt(Uniform(6, 12) * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)));
    cams[v] = {ProjectionMatrix(c), 1024, 1024};
    ann.push_back({v, "blue", MarkerRole::kCenter, Project(cams[v].projection, X)});
  }
  EXPECT_LT((LocalizeMarker(ann, cams).position - X).norm(), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RegistrationProperty, ::testing::Range(0, kSeeds));

// --- structure from motion ----------------------------------------------

class SfmProperty : public Seeded {
 protected:
  TurntableScene SmallScene(double noise) {
    TurntableConfig cfg;
    cfg.n_views = UniformInt(4, 10);
    cfg.elevation_deg = Uniform(30, 45);
    cfg.camera_distance = Uniform(8, 15);
    cfg.pixel_noise_std = noise;
    cfg.seed = seed();
    return GenerateTurntableScene(cfg, SampleEllipsoidPoints(UniformInt(15, 40), RandomVec(0.5, 2), seed()));
  }
};

TEST_P(SfmProperty, UnitWeightsReduceToTotalError) {
  const TurntableScene s = SmallScene(Uniform(0, 3));
  EXPECT_EQ(MaskedError(s.scene), TotalError(s.scene));
}

TEST_P(SfmProperty, ZeroWeightObservationsAreIgnored) {
  TurntableScene s = SmallScene(1);
  for (auto& o : s.scene.observations) o.weight = Uniform(0, 1) < 0.3 ? 0.0 : Uniform(0, 1);
  const double before = MaskedError(s.scene);
  for (auto& o : s.scene.observations) {
    if (o.weight == 0) o.pixel += Vec2(Uniform(-500, 500), Uniform(-500, 500));
  }
  EXPECT_EQ(MaskedError(s.scene), before);
}

TEST_P(SfmProperty, JacobianMatchesFiniteDifferences) {
  const TurntableScene s = SmallScene(2);
  SfmScene scene = s.scene;
  for (auto& c : scene.cameras) c.rotation += RandomVec(-0.05, 0.05);
  for (auto& o : scene.observations) o.weight = Uniform(0.1, 1);
  const Eigen::MatrixXd J = MaskedResidualJacobian(scene);
  const int nc = static_cast<int>(scene.cameras.size());
  Eigen::MatrixXd fd(J.rows(), J.cols());
  auto residuals_with = [&](int col, double delta) {
    SfmScene t = scene;
    if (col < 9 * nc) {
      CameraParams& c = t.cameras[col / 9];
      const int k = col % 9;
      if (k < 3) c.rotation[k] += delta;
      else if (k < 6) c.translation[k - 3] += delta;
      else if (k == 6) c.focal += delta;
      else c.principal[k - 7] += delta;
    } else {
      t.points[(col - 9 * nc) / 3][(col - 9 * nc) % 3] += delta;
    }
    return MaskedResiduals(t);
  };
  for (int col = 0; col < J.cols(); ++col) fd.col(col) = (residuals_with(col, 1e-6) - residuals_with(col, -1e-6)) / 2e-6;
  EXPECT_LT((J - fd).norm() / fd.norm(), 1e-4);
}

TEST_P(SfmProperty, AcceptedObjectivesNeverIncrease) {
  const TurntableScene s = SmallScene(0.5);
  PerturbConfig pc;
  pc.seed = seed();
  const BundleResult r = BundleAdjust(PerturbScene(s.scene, pc));
  const auto& objs = r.report.accepted_objectives;
  for (size_t k = 1; k < objs.size(); ++k) EXPECT_LE(objs[k], objs[k - 1]);
  EXPECT_LE(r.report.final_objective, r.report.initial_objective);
}

TEST_P(SfmProperty, GaugeInvariance) {
  const TurntableScene s = SmallScene(0.5);
  PerturbConfig pc;
  pc.seed = seed() + 7;
  const SfmScene init = PerturbScene(s.scene, pc);
  const SfmScene moved = TransformScene(init, RandomRotation(seed() + 3), RandomVec(-5, 5), std::exp(Uniform(-1.5, 1.5)));
  BundleOptions opt;
  opt.function_tolerance = 1e-14;
  const double a = BundleAdjust(init, opt).report.final_objective;
  const double b = BundleAdjust(moved, opt).report.final_objective;
  EXPECT_LE(Rel(b, a), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Seeds, SfmProperty, ::testing::Range(0, kSeeds));

// --- morphometry ---------------------------------------------------------

using StatsProperty = Seeded;

TEST_P(StatsProperty, AbsoluteErrorBoundsSignedError) {
  const int n = UniformInt(1, 30);
  const bool one_sign = UniformInt(0, 2) == 0;
  std::vector<VolumePair> pairs;
  for (int i = 0; i < n; ++i) {
    const double m = Uniform(1, 2000);
    const double f = one_sign ? Uniform(1.0, 1.2) : Uniform(0.8, 1.2);
    pairs.push_back({std::to_string(i), m, m * f});
  }
  const double mpe = Mpe(pairs), mape = Mape(pairs);
  EXPECT_GE(mape, std::abs(mpe) - 1e-12);
  bool all_pos = true, all_neg = true;
  for (const auto& p : pairs) {
    all_pos &= p.reconstructed >= p.measured;
    all_neg &= p.reconstructed <= p.measured;
  }
  if (all_pos || all_neg) {
    EXPECT_NEAR(mape, std::abs(mpe), 1e-9 * (1 + mape));
  } else {
    EXPECT_GT(mape, std::abs(mpe));
  }
  if (one_sign) EXPECT_GT(mpe, 0);
}

TEST_P(StatsProperty, CovScaleInvariance) {
  std::vector<double> v;
  const int n = UniformInt(2, 40);
  for (int i = 0; i < n; ++i) v.push_back(Uniform(0.5, 10));
  const double k = std::exp(Uniform(-5, 5));
  std::vector<double> scaled;
  for (double x : v) scaled.push_back(k * x);
  EXPECT_NEAR(Cov(scaled), Cov(v), 1e-12 * (1 + Cov(v)));
  const IndicatorSummary s = SummarizeIndicator(v);
  EXPECT_LE(s.min, s.mean);
  EXPECT_LE(s.mean, s.max);
  EXPECT_GE(*s.cov, 0);
}

MorphologyRecord SyntheticRecord(const std::string& id, double a, double b, double c, const std::vector<double>& fers) {
  ShapeMetrics3d s;
  s.a = a, s.b = b, s.c = c;
  s.fer_3d = c / a, s.c_over_b = c / b, s.b_over_a = b / a;
  s.sphericity = 0.8;
  std::vector<ViewMetrics> views;
  for (double f : fers) {
    ViewMetrics v;
    v.fer_2d = f;
    v.circularity = 0.8;
    views.push_back(v);
  }
  return SummarizeSample(id, views, s);
}

TEST_P(StatsProperty, EnvelopeIgnoresRatioLabels) {
  const double a = 1, b = Uniform(1, 2), c = Uniform(b, 3 * b);
  const MorphologyRecord r = SyntheticRecord("x", a, b, c, {Uniform(1, 3), Uniform(1, 3)});
  MorphologyRecord swapped = r;
  std::swap(swapped.shape.c_over_b, swapped.shape.b_over_a);
  const double tol = Uniform(0, 0.05);
  const EnvelopeResult e1 = EnvelopeCheck(r, tol), e2 = EnvelopeCheck(swapped, tol);
  EXPECT_EQ(e1.inside, e2.inside);
  EXPECT_EQ(e1.lower, e2.lower);
  EXPECT_EQ(e1.upper, e2.upper);
  EXPECT_EQ(e1.margin_lower, e2.margin_lower);
  EXPECT_EQ(e1.margin_upper, e2.margin_upper);
}

TEST_P(StatsProperty, ComparisonTablesPermuteIds) {
  const int n = UniformInt(1, 25);
  std::vector<MorphologyRecord> records;
  for (int i = 0; i < n; ++i) {
    // Duplicate 3D values on purpose to exercise tie-breaking.
    const double c = 1 + UniformInt(0, 5) * 0.25;
    records.push_back(SyntheticRecord("s" + std::to_string(UniformInt(0, 1000000)) + "_" + std::to_string(i), 1, 1, c, {1.0}));
  }
  const ComparisonTables t = BuildComparisonTables(records);
  std::vector<std::string> in, out;
  for (const auto& r : records) in.push_back(r.sample_id);
  for (const auto& row : t.fer.rows) out.push_back(row[0]);
  std::vector<std::string> sorted_in = in, sorted_out = out;
  std::sort(sorted_in.begin(), sorted_in.end());
  std::sort(sorted_out.begin(), sorted_out.end());
  EXPECT_EQ(sorted_in, sorted_out);
  for (size_t k = 1; k < t.fer.rows.size(); ++k) {
    EXPECT_LE(ParseDouble(t.fer.rows[k - 1][1], "fer"), ParseDouble(t.fer.rows[k][1], "fer"));
  }
  EXPECT_EQ(t.roundness.rows.size(), records.size());
  EXPECT_EQ(t.envelope.rows.size(), records.size());
}

INSTANTIATE_TEST_SUITE_P(Seeds, StatsProperty, ::testing::Range(0, kSeeds));

// --- serialization and CLI -----------------------------------------------

class FormatProperty : public Seeded {
 protected:
  TriangleMesh RandomMesh() {
    TriangleMesh m = TransformMesh(RandomConvexMesh(), Mat3::Identity(), RandomVec(-1e3, 1e3), std::exp(Uniform(-6, 6)));
    return m;
  }
};

TEST_P(FormatProperty, DoubleTextRoundTrip) {
  std::uniform_int_distribution<uint64_t> bits;
  for (int k = 0; k < 50; ++k) {
    const uint64_t b = bits(rng());
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    EXPECT_EQ(ParseDouble(FormatDouble(v), "v"), v == 0 ? 0.0 : v);
  }
}

TEST_P(FormatProperty, MeshRoundTrip) {
  const TriangleMesh m = RandomMesh();
  const TriangleMesh obj = ParseObj(FormatObj(m));
  EXPECT_EQ(obj.vertices, m.vertices);
  EXPECT_EQ(obj.faces, m.faces);
  for (PlyEncoding enc : {PlyEncoding::kAscii, PlyEncoding::kBinaryLittleEndian}) {
    const PlyData d = ParsePly(FormatPly(m.vertices, m.faces, enc));
    EXPECT_EQ(d.vertices, m.vertices);
    EXPECT_EQ(d.faces, m.faces);
  }
}

TEST_P(FormatProperty, MaskRoundTrip) {
  RasterMask m(UniformInt(1, 70), UniformInt(1, 70));
  const double density = Uniform(0, 1);
  for (auto& p : m.pixels) p = Uniform(0, 1) < density ? 1 : 0;
  EXPECT_EQ(ParsePgm(FormatPgm(m, true)).pixels, m.pixels);
  EXPECT_EQ(ParsePgm(FormatPgm(m, false)).pixels, m.pixels);
}

TEST_P(FormatProperty, CsvRoundTrip) {
  const std::string alphabet = "ab,\"\n\r x1.";
  auto field = [&] {
    std::string s;
    const int n = UniformInt(0, 8);
    for (int i = 0; i < n; ++i) s += alphabet[UniformInt(0, static_cast<int>(alphabet.size()) - 1)];
    return s;
  };
  CsvTable t;
  const int cols = UniformInt(1, 5);
  for (int c = 0; c < cols; ++c) t.header.push_back("h" + std::to_string(c) + field());
  const int rows = UniformInt(0, 10);
  for (int r = 0; r < rows; ++r) {
    std::vector<std::string> row;
    for (int c = 0; c < cols; ++c) row.push_back(field());
    // A single empty field is indistinguishable from a blank line.
    if (cols == 1 && row[0].empty()) row[0] = "x";
    t.rows.push_back(row);
  }
  const CsvTable back = ParseCsv(FormatCsv(t));
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
}

TEST_P(FormatProperty, SceneAndMarkerJsonRoundTrip) {
  TurntableConfig cfg;
  cfg.n_views = UniformInt(2, 6);
  cfg.seed = seed();
  cfg.pixel_noise_std = Uniform(0, 2);
  const TurntableScene ts = GenerateTurntableScene(cfg, SampleEllipsoidPoints(UniformInt(1, 20), RandomVec(0.3, 2), seed()));
  SceneDocument doc{ts.scene, std::nullopt, ts.true_points};
  for (auto& o : doc.scene.observations) o.weight = Uniform(0, 1);
  const SceneDocument back = ParseSceneJson(FormatSceneJson(doc));
  EXPECT_EQ(FormatSceneJson(back), FormatSceneJson(doc));
  EXPECT_EQ(back.scene.points, doc.scene.points);
  EXPECT_FALSE(back.true_cameras.has_value());

  MarkerDocument md;
  md.object_markers.push_back({"purple", RandomVec(-5, 5), RandomVec(-5, 5)});
  md.background_markers.push_back({"red", RandomVec(-5, 5)});
  md.background_markers.push_back({"green", RandomVec(-5, 5)});
  md.known_distances.push_back({"red", "green", Uniform(1, 30)});
  const MarkerDocument mb = ParseMarkerJson(FormatMarkerJson(md));
  EXPECT_EQ(mb.object_markers[0].head, md.object_markers[0].head);
  EXPECT_EQ(mb.background_markers[1].position, md.background_markers[1].position);
  EXPECT_EQ(mb.known_distances[0].cm, md.known_distances[0].cm);
}

TEST_P(FormatProperty, CliOutputIsDeterministic) {
  auto run = [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int status = RunCommand(args, out, err);
    EXPECT_EQ(status, kExitOk) << err.str();
    return out.str();
  };
  const std::vector<std::string> synth = {"synth-scene",  "--seed",   std::to_string(seed()), "--points", "20",
                                          "--noise",      "0.7",      "--views", std::to_string(UniformInt(6, 12)),
                                          "--clutter",    "0.1",      "--occlusion", "--perturb"};
  EXPECT_EQ(run(synth), run(synth));
  const auto dir = testing::ScratchDir("prop_cli_" + std::to_string(seed()));
  WriteMesh(dir / "m.ply", RandomConvexMesh());
  const std::vector<std::string> analyze = {"analyze-mesh", (dir / "m.ply").string(), "--units", "mm"};
  EXPECT_EQ(run(analyze), run(analyze));
  std::filesystem::remove_all(dir);
}

INSTANTIATE_TEST_SUITE_P(Seeds, FormatProperty, ::testing::Range(0, kSeeds));

}  // namespace
}  // namespace aggmorph
