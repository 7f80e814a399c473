#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aggmorph/mesh_geometry.h"
#include "aggmorph/silhouette.h"
#include "aggmorph/text_format.h"

namespace aggmorph {

struct VolumePair {
  std::string sample_id;
  double measured = 0;       // cm^3, ground truth
  double reconstructed = 0;  // cm^3
};

// Mean signed percentage error, 100 * mean((R - M) / M).
double Mpe(std::span<const VolumePair> pairs);

// Mean absolute percentage error.
double Mape(std::span<const VolumePair> pairs);

// Sample standard deviation (n - 1) over the mean.
double Cov(std::span<const double> samples);

struct IndicatorSummary {
  int count = 0;
  double mean = 0;
  double min = 0;
  double max = 0;
  // Absent for a single view rather than a fabricated zero.
  std::optional<double> std_dev;
  std::optional<double> cov;
};

IndicatorSummary SummarizeIndicator(std::span<const double> values);

struct MorphologyRecord {
  std::string sample_id;
  ShapeMetrics3d shape;
  std::vector<ViewMetrics> views;
  IndicatorSummary fer_2d;
  IndicatorSummary circularity;
};

MorphologyRecord SummarizeSample(const std::string& sample_id,
                                 std::span<const ViewMetrics> views,
                                 const ShapeMetrics3d& shape);

struct EnvelopeResult {
  bool inside = false;
  double lower = 0;         // min(c/b, b/a)
  double upper = 0;         // max(c/b, b/a)
  double margin_lower = 0;  // mean 2D FER - lower
  double margin_upper = 0;  // mean 2D FER - upper
};

// Inside iff lower - tolerance <= mean 2D FER <= upper + tolerance.
EnvelopeResult EnvelopeCheck(const MorphologyRecord& record, double tolerance = 0);

struct ComparisonTables {
  CsvTable fer;        // sorted by fer_3d
  CsvTable roundness;  // sorted by sphericity
  CsvTable envelope;   // sorted by fer_3d (c/a)
};

// Plot-ready tables; ties on the 3D value fall back to sample id.
ComparisonTables BuildComparisonTables(std::span<const MorphologyRecord> records);

}  // namespace aggmorph
