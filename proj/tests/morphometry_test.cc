#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "aggmorph/morphometry.h"
#include "aggmorph/shapes.h"
#include "test_util.h"

namespace aggmorph {
namespace {

using testing::CaughtCode;
using testing::RockTable;

std::vector<VolumePair> RockPairs() {
  std::vector<VolumePair> pairs;
  int id = 1;
  for (const auto& r : RockTable()) pairs.push_back({"rock" + std::to_string(id++), r.measured, r.reconstructed});
  return pairs;
}

TEST(Mpe, Basics) {
  const std::vector<VolumePair> same = {{"a", 5, 5}, {"b", 7, 7}};
  EXPECT_EQ(Mpe(same), 0);
  const std::vector<VolumePair> one = {{"a", 100, 110}};
  EXPECT_NEAR(Mpe(one), 10, 1e-12);
  const std::vector<VolumePair> mixed = {{"a", 100, 110}, {"b", 100, 90}};
  EXPECT_NEAR(Mpe(mixed), 0, 1e-12);
  EXPECT_NEAR(Mape(mixed), 10, 1e-12);
}

TEST(Mpe, RockTableRows) {
  // Oracle: the signed percentage errors summed term by term.
  double sum = 0;
  for (const auto& r : RockTable()) sum += 100 * (r.reconstructed - r.measured) / r.measured;
  const auto pairs = RockPairs();
  EXPECT_NEAR(Mpe(pairs), sum / 10, 1e-12);
  EXPECT_NEAR(Mpe(pairs), 1.95, 0.01);
  // Every row overestimates, so the absolute variant coincides.
  EXPECT_DOUBLE_EQ(Mape(pairs), Mpe(pairs));
}

TEST(Mpe, Errors) {
  EXPECT_EQ(CaughtCode([] { Mpe({}); }), ErrorCode::kEmptyInput);
  const std::vector<VolumePair> bad = {{"a", 0, 1}};
  EXPECT_EQ(CaughtCode([&] { Mape(bad); }), ErrorCode::kNonPositiveMeasurement);
}

TEST(Cov, Values) {
  const std::vector<double> flat = {2, 2, 2};
  EXPECT_EQ(Cov(flat), 0);
  const std::vector<double> ramp = {1, 2, 3};
  EXPECT_NEAR(Cov(ramp), 0.5, 1e-15);
  const std::vector<double> scaled = {7, 14, 21};
  EXPECT_NEAR(Cov(scaled), 0.5, 1e-15);
  const std::vector<double> single = {1};
  EXPECT_EQ(CaughtCode([&] { Cov(single); }), ErrorCode::kInsufficientSamples);
  const std::vector<double> zero = {-1, 1};
  EXPECT_EQ(CaughtCode([&] { Cov(zero); }), ErrorCode::kZeroMean);
}

TEST(SummarizeIndicator, SingleValueHasNoDispersion) {
  const std::vector<double> v = {1.3};
  const IndicatorSummary s = SummarizeIndicator(v);
  EXPECT_EQ(s.count, 1);
  EXPECT_EQ(s.min, 1.3);
  EXPECT_EQ(s.mean, 1.3);
  EXPECT_EQ(s.max, 1.3);
  EXPECT_FALSE(s.std_dev.has_value());
  EXPECT_FALSE(s.cov.has_value());
}

TEST(SummarizeIndicator, Ordering) {
  const std::vector<double> v = {0.1, 0.1, 0.1};
  const IndicatorSummary s = SummarizeIndicator(v);
  EXPECT_LE(s.min, s.mean);
  EXPECT_LE(s.mean, s.max);
  ASSERT_TRUE(s.cov.has_value());
  EXPECT_GE(*s.cov, 0);
}

ViewMetrics View(double fer, double circ) {
  ViewMetrics v;
  v.fer_2d = fer;
  v.circularity = circ;
  v.area = v.perimeter = v.l_max = v.l_min = 1;
  return v;
}

MorphologyRecord Record(const std::string& id, double fer_mean, double a, double b, double c) {
  ShapeMetrics3d s;
  s.a = a;
  s.b = b;
  s.c = c;
  s.fer_3d = c / a;
  s.c_over_b = c / b;
  s.b_over_a = b / a;
  s.sphericity = 0.8;
  const std::vector<ViewMetrics> views = {View(fer_mean, 0.8)};
  return SummarizeSample(id, views, s);
}

TEST(SummarizeSample, EmptyViews) {
  EXPECT_EQ(CaughtCode([] { SummarizeSample("x", {}, ShapeMetrics3d{}); }), ErrorCode::kEmptyViews);
}

TEST(SummarizeSample, SphereViewsAreUniform) {
  const TriangleMesh sphere = MakeIcosphere(1, 4);
  const auto views = AnalyzeTurntableViews(sphere, 12, 35, 512);
  const MorphologyRecord r = SummarizeSample("sphere", views, AnalyzeMesh(sphere));
  EXPECT_NEAR(r.fer_2d.mean, 1, 0.02);
  ASSERT_TRUE(r.fer_2d.cov.has_value());
  EXPECT_LT(*r.fer_2d.cov, 0.01);
  ASSERT_TRUE(r.circularity.cov.has_value());
  EXPECT_LT(*r.circularity.cov, 0.01);
  // The traced contour of a raster disk is a chamfered staircase, which
  // lengthens the perimeter by a few percent; no smoothing is applied.
  EXPECT_GT(r.circularity.mean, 0.88);
  EXPECT_LE(r.circularity.max, 1);
  const EnvelopeResult env = EnvelopeCheck(r, 0.02);
  EXPECT_TRUE(env.inside);
  EXPECT_NEAR(env.margin_lower, 0, 0.02);
}

TEST(SummarizeSample, EllipsoidTwoDimensionalFerBelowThreeDimensional) {
  const TriangleMesh e = MakeEllipsoid(Vec3(3, 4, 6), 3);
  const ShapeMetrics3d shape = AnalyzeMesh(e);
  EXPECT_NEAR(shape.fer_3d, 2.0, 0.01);
  const auto views = AnalyzeTurntableViews(e, 12, 35, 512);
  const MorphologyRecord r = SummarizeSample("ellipsoid", views, shape);
  EXPECT_LT(r.fer_2d.mean, shape.fer_3d);
  EXPECT_LE(r.fer_2d.max, shape.fer_3d);
  EXPECT_EQ(r.views.size(), 12u);
}

TEST(EnvelopeCheck, Arithmetic) {
  // c/b = 1.5, b/a = 4/3.
  const EnvelopeResult in = EnvelopeCheck(Record("a", 1.4, 3, 4, 6));
  EXPECT_TRUE(in.inside);
  EXPECT_NEAR(in.lower, 4.0 / 3, 1e-12);
  EXPECT_NEAR(in.upper, 1.5, 1e-12);
  EXPECT_NEAR(in.margin_lower, 0.0667, 1e-4);
  EXPECT_NEAR(in.margin_upper, -0.1, 1e-12);
  const EnvelopeResult out = EnvelopeCheck(Record("b", 1.6, 3, 4, 6));
  EXPECT_FALSE(out.inside);
  EXPECT_GT(out.margin_upper, 0);
}

TEST(EnvelopeCheck, SphereOnTheBoundary) {
  const EnvelopeResult r = EnvelopeCheck(Record("s", 1.0, 2, 2, 2));
  EXPECT_TRUE(r.inside);
  EXPECT_EQ(r.margin_lower, 0);
  EXPECT_EQ(r.margin_upper, 0);
}

TEST(ComparisonTables, SortedByThreeDimensionalValue) {
  const std::vector<MorphologyRecord> records = {Record("x", 1.5, 1, 1.5, 2.0), Record("y", 1.1, 1, 1.1, 1.2),
                                                 Record("z", 1.2, 1, 1.2, 1.5)};
  const ComparisonTables t = BuildComparisonTables(records);
  ASSERT_EQ(t.fer.rows.size(), 3u);
  EXPECT_EQ(t.fer.rows[0][0], "y");
  EXPECT_EQ(t.fer.rows[1][0], "z");
  EXPECT_EQ(t.fer.rows[2][0], "x");
  EXPECT_EQ(t.fer.header.front(), "sample_id");
  EXPECT_EQ(t.envelope.rows.size(), 3u);
  EXPECT_EQ(t.roundness.rows.size(), 3u);
  EXPECT_EQ(CaughtCode([] { BuildComparisonTables({}); }), ErrorCode::kEmptyInput);
}

TEST(ComparisonTables, SingleRecordPopulated) {
  ShapeMetrics3d s;
  s.a = 1, s.b = 2, s.c = 3, s.fer_3d = 3, s.c_over_b = 1.5, s.b_over_a = 2, s.sphericity = 0.7;
  const std::vector<ViewMetrics> views = {View(1.5, 0.7), View(1.7, 0.75)};
  const std::vector<MorphologyRecord> records = {SummarizeSample("only", views, s)};
  const ComparisonTables t = BuildComparisonTables(records);
  ASSERT_EQ(t.fer.rows.size(), 1u);
  for (const std::string& cell : t.fer.rows[0]) EXPECT_FALSE(cell.empty());
  for (const std::string& cell : t.roundness.rows[0]) EXPECT_FALSE(cell.empty());
  for (const std::string& cell : t.envelope.rows[0]) EXPECT_FALSE(cell.empty());
}

TEST(ComparisonTables, SyntheticCorpusOrdering) {
  // min <= mean <= max <= 3D FER for elongated ellipsoids viewed from the rig.
  std::vector<MorphologyRecord> records;
  for (int k = 0; k < 4; ++k) {
    const double r = 1.3 + 0.5 * k;
    const TriangleMesh e = MakeEllipsoid(Vec3(1, 0.5 * (1 + r), r), 3);
    records.push_back(SummarizeSample("e" + std::to_string(k), AnalyzeTurntableViews(e, 12, 35, 256), AnalyzeMesh(e)));
  }
  for (const auto& rec : records) {
    EXPECT_LE(rec.fer_2d.min, rec.fer_2d.mean);
    EXPECT_LE(rec.fer_2d.mean, rec.fer_2d.max);
    EXPECT_LE(rec.fer_2d.max, rec.shape.fer_3d) << rec.sample_id;
  }
}

}  // namespace
}  // namespace aggmorph
