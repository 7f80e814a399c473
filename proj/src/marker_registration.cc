#include "aggmorph/marker_registration.h"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>

#include "aggmorph/error.h"

namespace aggmorph {
namespace {

Vec2 ProjectWith(const Mat34& P, const Vec3& X) {
  const Vec3 h = P * X.homogeneous();
  return h.hnormalized();
}

}  // namespace

std::string_view MarkerRoleName(MarkerRole role) {
  switch (role) {
    case MarkerRole::kHead: return "head";
    case MarkerRole::kTail: return "tail";
    case MarkerRole::kCenter: return "center";
  }
  return "center";
}

MarkerRole ParseMarkerRole(std::string_view name) {
  if (name == "head") return MarkerRole::kHead;
  if (name == "tail") return MarkerRole::kTail;
  if (name == "center") return MarkerRole::kCenter;
  Fail(ErrorCode::kInvalidInput, "unknown marker role '" + std::string(name) + "'");
}

LocalizedMarker LocalizeMarker(std::span<const MarkerAnnotation> annotations,
                               const std::map<int, AnnotatedView>& views,
                               const LocalizationOptions& options) {
  std::set<int> distinct;
  for (const auto& a : annotations) {
    if (a.marker_label != annotations.front().marker_label ||
        a.role != annotations.front().role) {
      Fail(ErrorCode::kInvalidInput,
           "annotations mix different markers or roles");
    }
    const auto it = views.find(a.view_id);
    if (it == views.end()) {
      Fail(ErrorCode::kInvalidInput,
           "no camera for view " + std::to_string(a.view_id));
    }
    const AnnotatedView& v = it->second;
    if (a.pixel.x() < 0 || a.pixel.y() < 0 || a.pixel.x() > v.width ||
        a.pixel.y() > v.height) {
      Fail(ErrorCode::kInvalidInput, "annotation pixel outside view " +
                                         std::to_string(a.view_id));
    }
    distinct.insert(a.view_id);
  }
  if (distinct.size() < 2) {
    Fail(ErrorCode::kInsufficientViews,
         "marker localization needs annotations in at least two views");
  }

  // Ray directions from each camera center through the annotated pixel.
  std::vector<Vec3> rays;
  for (const auto& a : annotations) {
    const Mat34& P = views.at(a.view_id).projection;
    const Mat3 M = P.leftCols<3>();
    rays.push_back((M.inverse() * a.pixel.homogeneous()).normalized());
  }
  double widest = 0;
  for (size_t i = 0; i < rays.size(); ++i) {
    for (size_t j = i + 1; j < rays.size(); ++j) {
      const double s = rays[i].cross(rays[j]).norm();
      widest = std::max(widest, std::asin(std::min(1.0, s)));
    }
  }
  if (widest < options.min_ray_angle) {
    Fail(ErrorCode::kIllConditioned, "viewing rays are nearly parallel");
  }

  Eigen::MatrixXd A(2 * annotations.size(), 4);
  for (size_t k = 0; k < annotations.size(); ++k) {
    const auto& a = annotations[k];
    const Mat34& P = views.at(a.view_id).projection;
    Eigen::RowVector4d r0 = a.pixel.x() * P.row(2) - P.row(0);
    Eigen::RowVector4d r1 = a.pixel.y() * P.row(2) - P.row(1);
    A.row(2 * k) = r0 / r0.norm();
    A.row(2 * k + 1) = r1 / r1.norm();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::Vector4d X = svd.matrixV().col(3);
  if (std::abs(X(3)) < 1e-14 * X.head<3>().norm()) {
    Fail(ErrorCode::kIllConditioned, "triangulated point is at infinity");
  }

  LocalizedMarker out;
  out.position = X.head<3>() / X(3);
  double sum_sq = 0;
  for (const auto& a : annotations) {
    const double r =
        (ProjectWith(views.at(a.view_id).projection, out.position) - a.pixel).norm();
    out.residuals_px.push_back(r);
    sum_sq += r * r;
  }
  out.rms_reprojection_px = std::sqrt(sum_sq / annotations.size());
  return out;
}

SimilarityTransform SimilarityTransform::Inverse() const {
  SimilarityTransform inv;
  inv.rotation = rotation.transpose();
  inv.scale = 1.0 / scale;
  inv.translation = -inv.scale * (inv.rotation * translation);
  return inv;
}

SimilarityTransform Compose(const SimilarityTransform& outer,
                            const SimilarityTransform& inner) {
  SimilarityTransform out;
  out.rotation = outer.rotation * inner.rotation;
  out.scale = outer.scale * inner.scale;
  out.translation = outer.scale * (outer.rotation * inner.translation) +
                    outer.translation;
  return out;
}

SimilarityEstimate EstimateSimilarity(std::span<const Vec3> source,
                                      std::span<const Vec3> target) {
  if (source.size() != target.size()) {
    Fail(ErrorCode::kCountMismatch, "source has " +
                                        std::to_string(source.size()) +
                                        " points, target " +
                                        std::to_string(target.size()));
  }
  const size_t n = source.size();
  if (n < 3) Fail(ErrorCode::kDegenerate, "need at least 3 correspondences");

  Vec3 mu_s = Vec3::Zero(), mu_t = Vec3::Zero();
  for (size_t i = 0; i < n; ++i) {
    mu_s += source[i];
    mu_t += target[i];
  }
  mu_s /= static_cast<double>(n);
  mu_t /= static_cast<double>(n);

  Mat3 cov = Mat3::Zero();
  Mat3 scatter_s = Mat3::Zero();
  double var_s = 0;
  for (size_t i = 0; i < n; ++i) {
    const Vec3 ds = source[i] - mu_s;
    const Vec3 dt = target[i] - mu_t;
    cov += dt * ds.transpose();
    scatter_s += ds * ds.transpose();
    var_s += ds.squaredNorm();
  }
  cov /= static_cast<double>(n);
  var_s /= static_cast<double>(n);

  // Collinear (or coincident) sources leave the rotation about that line
  // undetermined.
  Eigen::SelfAdjointEigenSolver<Mat3> spread(scatter_s);
  const Vec3 ev = spread.eigenvalues();  // ascending
  if (!(ev(2) > 0) || ev(1) <= 1e-12 * ev(2)) {
    Fail(ErrorCode::kDegenerate, "source points are collinear");
  }

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 S = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) {
    S(2, 2) = -1;
  }
  SimilarityEstimate est;
  est.transform.rotation = svd.matrixU() * S * svd.matrixV().transpose();
  const double trace = (svd.singularValues().asDiagonal() * S).trace();
  est.transform.scale = trace / var_s;
  if (!(est.transform.scale > 0)) {
    Fail(ErrorCode::kDegenerate, "target points collapse to a single point");
  }
  est.transform.translation =
      mu_t - est.transform.scale * (est.transform.rotation * mu_s);

  double sum_sq = 0;
  for (size_t i = 0; i < n; ++i) {
    sum_sq += (est.transform(source[i]) - target[i]).squaredNorm();
  }
  est.rms = std::sqrt(sum_sq / static_cast<double>(n));
  return est;
}

std::vector<Vec3> ApplySimilarity(const SimilarityTransform& transform,
                                  std::span<const Vec3> cloud) {
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const Vec3& p : cloud) out.push_back(transform(p));
  return out;
}

StitchResult Stitch(std::span<const Vec3> cloud_a, std::span<const Vec3> cloud_b,
                    std::span<const ObjectMarker> markers_a,
                    std::span<const ObjectMarker> markers_b) {
  auto check_unique = [](std::span<const ObjectMarker> markers) {
    std::set<std::string> seen;
    for (const auto& m : markers) {
      if (!seen.insert(m.label).second) {
        Fail(ErrorCode::kInvalidInput, "duplicate marker label '" + m.label + "'");
      }
    }
  };
  check_unique(markers_a);
  check_unique(markers_b);

  std::vector<Vec3> src, dst;
  std::vector<std::pair<std::string, MarkerRole>> tags;
  for (const auto& mb : markers_b) {
    const auto it = std::find_if(markers_a.begin(), markers_a.end(),
                                 [&](const ObjectMarker& ma) { return ma.label == mb.label; });
    if (it == markers_a.end()) continue;
    src.push_back(mb.head);
    dst.push_back(it->head);
    tags.emplace_back(mb.label, MarkerRole::kHead);
    src.push_back(mb.tail);
    dst.push_back(it->tail);
    tags.emplace_back(mb.label, MarkerRole::kTail);
  }
  if (src.empty()) {
    Fail(ErrorCode::kLabelMismatch, "the two marker sets share no label");
  }
  if (src.size() < 3) {
    Fail(ErrorCode::kInsufficientCorrespondences,
         "only " + std::to_string(src.size()) +
             " marker points are shared; at least 3 are required");
  }

  const SimilarityEstimate est = EstimateSimilarity(src, dst);
  StitchResult result;
  result.b_to_a = est.transform;
  result.marker_rms = est.rms;
  for (size_t i = 0; i < src.size(); ++i) {
    result.residuals.push_back(
        {tags[i].first, tags[i].second, (est.transform(src[i]) - dst[i]).norm()});
  }
  result.merged.assign(cloud_a.begin(), cloud_a.end());
  result.merged.reserve(cloud_a.size() + cloud_b.size());
  for (const Vec3& p : cloud_b) result.merged.push_back(est.transform(p));
  return result;
}

ScaleCalibration CalibrateScale(std::span<const BackgroundMarker> markers,
                                std::span<const KnownDistance> distances) {
  if (distances.empty()) {
    Fail(ErrorCode::kEmptyInput, "no known distances supplied");
  }
  std::map<std::string, Vec3> by_label;
  for (const auto& m : markers) {
    if (!by_label.emplace(m.label, m.position).second) {
      Fail(ErrorCode::kInvalidInput, "duplicate marker label '" + m.label + "'");
    }
  }
  auto lookup = [&](const std::string& label) -> const Vec3& {
    const auto it = by_label.find(label);
    if (it == by_label.end()) {
      Fail(ErrorCode::kMissingLabel, "no background marker labeled '" + label + "'");
    }
    return it->second;
  };

  ScaleCalibration out;
  double num = 0, den = 0;
  for (const auto& d : distances) {
    const double local = (lookup(d.a_label) - lookup(d.b_label)).norm();
    if (!(local > 0)) {
      Fail(ErrorCode::kZeroLocalDistance,
           "markers '" + d.a_label + "' and '" + d.b_label + "' coincide");
    }
    if (!(d.cm > 0)) {
      Fail(ErrorCode::kNonPositiveInput, "known distance must be positive");
    }
    num += d.cm * local;
    den += local * local;
    out.residuals.push_back({d.a_label, d.b_label, local, d.cm, 0.0});
  }
  out.scale = num / den;
  for (auto& r : out.residuals) r.residual_cm = out.scale * r.local_distance - r.known_cm;
  return out;
}

}  // namespace aggmorph
