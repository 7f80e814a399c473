#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "aggmorph/mesh_geometry.h"

namespace aggmorph {

using Mat34 = Eigen::Matrix<double, 3, 4>;

// Head-tail marker drawn on the particle. The default palette is
// {"purple", "red"}, but any unique labels work.
struct ObjectMarker {
  std::string label;
  Vec3 head = Vec3::Zero();
  Vec3 tail = Vec3::Zero();
};

// Scale reference placed on the turntable ("red", "green", "blue", "yellow").
struct BackgroundMarker {
  std::string label;
  Vec3 position = Vec3::Zero();
};

struct KnownDistance {
  std::string a_label;
  std::string b_label;
  double cm = 0;
};

enum class MarkerRole { kHead, kTail, kCenter };

std::string_view MarkerRoleName(MarkerRole role);
MarkerRole ParseMarkerRole(std::string_view name);

// A manually labeled marker position in one view.
struct MarkerAnnotation {
  int view_id = 0;
  std::string marker_label;
  MarkerRole role = MarkerRole::kCenter;
  Vec2 pixel = Vec2::Zero();
};

struct AnnotatedView {
  Mat34 projection = Mat34::Zero();
  int width = 0;
  int height = 0;
};

struct LocalizationOptions {
  // Rays closer to parallel than this (radians) cannot be triangulated.
  double min_ray_angle = 1e-3;
};

struct LocalizedMarker {
  Vec3 position = Vec3::Zero();
  double rms_reprojection_px = 0;
  std::vector<double> residuals_px;  // one per annotation, input order
};

// Linear least-squares (DLT) triangulation of one marker/role from two or
// more views.
LocalizedMarker LocalizeMarker(std::span<const MarkerAnnotation> annotations,
                               const std::map<int, AnnotatedView>& views,
                               const LocalizationOptions& options = {});

// x -> scale * rotation * x + translation.
struct SimilarityTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  Vec3 operator()(const Vec3& x) const {
    return scale * (rotation * x) + translation;
  }
  SimilarityTransform Inverse() const;
};

// (outer ∘ inner)(x) = outer(inner(x)).
SimilarityTransform Compose(const SimilarityTransform& outer,
                            const SimilarityTransform& inner);

struct SimilarityEstimate {
  SimilarityTransform transform;
  double rms = 0;
};

// Closed-form least squares over correspondences via the cross-covariance
// SVD, with the reflection guard forcing det(R) = +1.
SimilarityEstimate EstimateSimilarity(std::span<const Vec3> source,
                                      std::span<const Vec3> target);

std::vector<Vec3> ApplySimilarity(const SimilarityTransform& transform,
                                  std::span<const Vec3> cloud);

struct StitchResult {
  std::vector<Vec3> merged;
  SimilarityTransform b_to_a;
  double marker_rms = 0;
  // Per correspondence: label, role and alignment residual.
  struct Residual {
    std::string label;
    MarkerRole role;
    double distance;
  };
  std::vector<Residual> residuals;
};

// Maps cloud_b into cloud_a's frame using markers paired by (label, role)
// and returns the union (cloud_a first).
StitchResult Stitch(std::span<const Vec3> cloud_a, std::span<const Vec3> cloud_b,
                    std::span<const ObjectMarker> markers_a,
                    std::span<const ObjectMarker> markers_b);

struct ScaleCalibration {
  double scale = 0;  // cm per local unit
  struct PairResidual {
    std::string a_label;
    std::string b_label;
    double local_distance;
    double known_cm;
    double residual_cm;  // scale * local - known
  };
  std::vector<PairResidual> residuals;
};

// Least-squares s = sum(d_known * d_local) / sum(d_local^2) over all pairs.
ScaleCalibration CalibrateScale(std::span<const BackgroundMarker> markers,
                                std::span<const KnownDistance> distances);

}  // namespace aggmorph
