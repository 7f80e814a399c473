#include "aggmorph/morphometry.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aggmorph/error.h"

namespace aggmorph {
namespace {

std::vector<double> RelativeErrors(std::span<const VolumePair> pairs) {
  if (pairs.empty()) Fail(ErrorCode::kEmptyInput, "no volume pairs");
  std::vector<double> rel;
  rel.reserve(pairs.size());
  for (const VolumePair& p : pairs) {
    if (!(p.measured > 0)) {
      Fail(ErrorCode::kNonPositiveMeasurement,
           "sample '" + p.sample_id + "' has measured volume " + FormatDouble(p.measured));
    }
    rel.push_back((p.reconstructed - p.measured) / p.measured);
  }
  return rel;
}

double Mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double SampleStdDev(std::span<const double> v, double mean) {
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string Opt(const std::optional<double>& v) { return v ? FormatDouble(*v) : std::string(); }

}  // namespace

double Mpe(std::span<const VolumePair> pairs) {
  const std::vector<double> rel = RelativeErrors(pairs);
  return 100.0 * Mean(rel);
}

double Mape(std::span<const VolumePair> pairs) {
  std::vector<double> rel = RelativeErrors(pairs);
  for (double& r : rel) r = std::abs(r);
  return 100.0 * Mean(rel);
}

double Cov(std::span<const double> samples) {
  if (samples.size() < 2) {
    Fail(ErrorCode::kInsufficientSamples, "CoV needs at least two samples");
  }
  const double mean = Mean(samples);
  if (mean == 0) Fail(ErrorCode::kZeroMean, "CoV is undefined for zero mean");
  return SampleStdDev(samples, mean) / mean;
}

IndicatorSummary SummarizeIndicator(std::span<const double> values) {
  if (values.empty()) Fail(ErrorCode::kEmptyViews, "no values to summarize");
  IndicatorSummary s;
  s.count = static_cast<int>(values.size());
  s.mean = Mean(values);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  // Rounding can push the mean of near-equal values just past an extreme.
  s.mean = std::clamp(s.mean, s.min, s.max);
  if (values.size() >= 2) {
    s.std_dev = SampleStdDev(values, s.mean);
    if (s.mean != 0) s.cov = *s.std_dev / s.mean;
  }
  return s;
}

MorphologyRecord SummarizeSample(const std::string& sample_id,
                                 std::span<const ViewMetrics> views,
                                 const ShapeMetrics3d& shape) {
  if (views.empty()) {
    Fail(ErrorCode::kEmptyViews, "sample '" + sample_id + "' has no views");
  }
  MorphologyRecord r;
  r.sample_id = sample_id;
  r.shape = shape;
  r.views.assign(views.begin(), views.end());
  std::vector<double> fer, circ;
  for (const ViewMetrics& v : views) {
    fer.push_back(v.fer_2d);
    circ.push_back(v.circularity);
  }
  r.fer_2d = SummarizeIndicator(fer);
  r.circularity = SummarizeIndicator(circ);
  return r;
}

EnvelopeResult EnvelopeCheck(const MorphologyRecord& record, double tolerance) {
  EnvelopeResult e;
  e.lower = std::min(record.shape.c_over_b, record.shape.b_over_a);
  e.upper = std::max(record.shape.c_over_b, record.shape.b_over_a);
  const double fer = record.fer_2d.mean;
  e.margin_lower = fer - e.lower;
  e.margin_upper = fer - e.upper;
  e.inside = e.margin_lower >= -tolerance && e.margin_upper <= tolerance;
  return e;
}

ComparisonTables BuildComparisonTables(std::span<const MorphologyRecord> records) {
  if (records.empty()) Fail(ErrorCode::kEmptyInput, "no records to compare");

  auto sorted_by = [&](auto key) {
    std::vector<const MorphologyRecord*> order;
    for (const auto& r : records) order.push_back(&r);
    std::stable_sort(order.begin(), order.end(), [&](const auto* x, const auto* y) {
      const double kx = key(*x), ky = key(*y);
      if (kx != ky) return kx < ky;
      return x->sample_id < y->sample_id;
    });
    return order;
  };

  auto summary_cells = [](const IndicatorSummary& s) {
    return std::vector<std::string>{FormatDouble(s.mean), FormatDouble(s.min),
                                    FormatDouble(s.max), Opt(s.std_dev), Opt(s.cov),
                                    std::to_string(s.count)};
  };

  ComparisonTables t;
  t.fer.header = {"sample_id", "fer_3d", "fer_2d_mean", "fer_2d_min", "fer_2d_max",
                  "fer_2d_std", "fer_2d_cov", "n_views"};
  for (const auto* r : sorted_by([](const MorphologyRecord& m) { return m.shape.fer_3d; })) {
    std::vector<std::string> row{r->sample_id, FormatDouble(r->shape.fer_3d)};
    for (auto& cell : summary_cells(r->fer_2d)) row.push_back(std::move(cell));
    t.fer.rows.push_back(std::move(row));
  }

  t.roundness.header = {"sample_id", "sphericity", "circularity_mean", "circularity_min",
                        "circularity_max", "circularity_std", "circularity_cov", "n_views"};
  for (const auto* r : sorted_by([](const MorphologyRecord& m) { return m.shape.sphericity; })) {
    std::vector<std::string> row{r->sample_id, FormatDouble(r->shape.sphericity)};
    for (auto& cell : summary_cells(r->circularity)) row.push_back(std::move(cell));
    t.roundness.rows.push_back(std::move(row));
  }

  t.envelope.header = {"sample_id", "fer_2d_mean", "c_over_a", "c_over_b", "b_over_a",
                       "envelope_lower", "envelope_upper", "margin_lower", "margin_upper",
                       "inside"};
  for (const auto* r : sorted_by([](const MorphologyRecord& m) { return m.shape.fer_3d; })) {
    const EnvelopeResult e = EnvelopeCheck(*r);
    t.envelope.rows.push_back({r->sample_id, FormatDouble(r->fer_2d.mean),
                               FormatDouble(r->shape.fer_3d), FormatDouble(r->shape.c_over_b),
                               FormatDouble(r->shape.b_over_a), FormatDouble(e.lower),
                               FormatDouble(e.upper), FormatDouble(e.margin_lower),
                               FormatDouble(e.margin_upper), e.inside ? "true" : "false"});
  }
  return t;
}

}  // namespace aggmorph
