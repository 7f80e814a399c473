#include "aggmorph/masked_sfm.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "aggmorph/error.h"

namespace aggmorph {
namespace {

Mat3 Skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// d(R(w) v) / dw for the axis-angle parametrization.
Mat3 RotatedPointDerivative(const Vec3& w, const Mat3& R, const Vec3& v) {
  const double theta2 = w.squaredNorm();
  if (theta2 < 1e-16) return -Skew(R * v);
  return -R * Skew(v) *
         (w * w.transpose() + (R.transpose() - Mat3::Identity()) * Skew(w)) /
         theta2;
}

Vec3 CanonicalAxisAngle(const Vec3& w) {
  const double theta = w.norm();
  if (theta <= std::numbers::pi) return w;
  return RotationToAxisAngle(AxisAngleToRotation(w));
}

Vec3 RandomUnit(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  while (true) {
    const Vec3 v(normal(rng), normal(rng), normal(rng));
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

}  // namespace

Mat3 AxisAngleToRotation(const Vec3& axis_angle) {
  const double theta = axis_angle.norm();
  if (theta < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(theta, axis_angle / theta).toRotationMatrix();
}

Vec3 RotationToAxisAngle(const Mat3& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

Mat34 ProjectionMatrix(const CameraParams& camera) {
  Mat3 K = Mat3::Identity();
  K(0, 0) = camera.focal;
  K(1, 1) = camera.focal;
  K(0, 2) = camera.principal.x();
  K(1, 2) = camera.principal.y();
  Mat34 Rt;
  Rt.leftCols<3>() = AxisAngleToRotation(camera.rotation);
  Rt.col(3) = camera.translation;
  return K * Rt;
}

Vec2 Project(const Mat34& P, const Vec3& X) {
  const Vec3 h = P * X.homogeneous();
  if (std::abs(h.z()) <= 1e-12) {
    Fail(ErrorCode::kAtInfinity, "point projects to infinity");
  }
  return h.hnormalized();
}

Vec2 ProjectPoint(const CameraParams& camera, const Vec3& X) {
  const Vec3 Xc = AxisAngleToRotation(camera.rotation) * X + camera.translation;
  if (Xc.z() <= 1e-12) Fail(ErrorCode::kBehindCamera, "point is behind the camera");
  return camera.focal * Xc.head<2>() / Xc.z() + camera.principal;
}

Vec3 CameraCenter(const CameraParams& camera) {
  return -AxisAngleToRotation(camera.rotation).transpose() * camera.translation;
}

void ValidateScene(const SfmScene& scene) {
  const int nc = static_cast<int>(scene.cameras.size());
  const int np = static_cast<int>(scene.points.size());
  for (int c = 0; c < nc; ++c) {
    if (!(scene.cameras[c].focal > 0)) {
      Fail(ErrorCode::kInvalidScene, "camera " + std::to_string(c) + " has non-positive focal");
    }
  }
  std::set<std::pair<int, int>> seen;
  for (size_t k = 0; k < scene.observations.size(); ++k) {
    const Observation& o = scene.observations[k];
    if (o.camera < 0 || o.camera >= nc || o.point < 0 || o.point >= np) {
      Fail(ErrorCode::kInvalidScene, "observation " + std::to_string(k) + " has an invalid index");
    }
    if (!(o.weight >= 0 && o.weight <= 1)) {
      Fail(ErrorCode::kInvalidScene, "observation " + std::to_string(k) + " weight outside [0, 1]");
    }
    if (!seen.emplace(o.camera, o.point).second) {
      Fail(ErrorCode::kInvalidScene, "observation " + std::to_string(k) +
                                         " duplicates camera " + std::to_string(o.camera) +
                                         ", point " + std::to_string(o.point));
    }
  }
}

namespace {

double SquaredReprojection(const SfmScene& scene, size_t k) {
  const Observation& o = scene.observations[k];
  try {
    const Vec2 p = Project(ProjectionMatrix(scene.cameras[o.camera]), scene.points[o.point]);
    return (o.pixel - p).squaredNorm();
  } catch (const Error& e) {
    Fail(e.code(), "observation " + std::to_string(k) + " (camera " +
                       std::to_string(o.camera) + ", point " + std::to_string(o.point) +
                       "): " + e.detail());
  }
}

}  // namespace

double TotalError(const SfmScene& scene) {
  ValidateScene(scene);
  double sum = 0;
  for (size_t k = 0; k < scene.observations.size(); ++k) sum += SquaredReprojection(scene, k);
  return sum;
}

double MaskedError(const SfmScene& scene) {
  ValidateScene(scene);
  double sum = 0;
  for (size_t k = 0; k < scene.observations.size(); ++k) {
    const double w = scene.observations[k].weight;
    // A zero mask removes the term entirely, whatever the pixel holds.
    if (w == 0) continue;
    sum += w * SquaredReprojection(scene, k);
  }
  return sum;
}

Eigen::VectorXd MaskedResiduals(const SfmScene& scene) {
  ValidateScene(scene);
  Eigen::VectorXd r(2 * scene.observations.size());
  for (size_t k = 0; k < scene.observations.size(); ++k) {
    const Observation& o = scene.observations[k];
    const Vec2 p = ProjectPoint(scene.cameras[o.camera], scene.points[o.point]);
    r.segment<2>(2 * k) = std::sqrt(o.weight) * (o.pixel - p);
  }
  return r;
}

ProjectionJacobian ProjectionDerivatives(const CameraParams& camera, const Vec3& X) {
  const Mat3 R = AxisAngleToRotation(camera.rotation);
  const Vec3 Xc = R * X + camera.translation;
  const double iz = 1.0 / Xc.z();
  const double f = camera.focal;
  Eigen::Matrix<double, 2, 3> d_xc;
  d_xc << f * iz, 0, -f * Xc.x() * iz * iz, 0, f * iz, -f * Xc.y() * iz * iz;

  ProjectionJacobian J;
  J.projection = f * Xc.head<2>() * iz + camera.principal;
  J.camera.leftCols<3>() = d_xc * RotatedPointDerivative(camera.rotation, R, X);
  J.camera.middleCols<3>(3) = d_xc;
  J.camera.col(6) = Xc.head<2>() * iz;
  J.camera.col(7) = Vec2(1, 0);
  J.camera.col(8) = Vec2(0, 1);
  J.point = d_xc * R;
  return J;
}

Eigen::MatrixXd MaskedResidualJacobian(const SfmScene& scene) {
  ValidateScene(scene);
  const size_t nc = scene.cameras.size();
  Eigen::MatrixXd J =
      Eigen::MatrixXd::Zero(2 * scene.observations.size(), kCameraParams * nc + 3 * scene.points.size());
  for (size_t k = 0; k < scene.observations.size(); ++k) {
    const Observation& o = scene.observations[k];
    const ProjectionJacobian pj = ProjectionDerivatives(scene.cameras[o.camera], scene.points[o.point]);
    const double s = -std::sqrt(o.weight);
    J.block<2, kCameraParams>(2 * k, kCameraParams * o.camera) = s * pj.camera;
    J.block<2, 3>(2 * k, kCameraParams * nc + 3 * o.point) = s * pj.point;
  }
  return J;
}

std::string_view TerminationName(Termination t) {
  switch (t) {
    case Termination::kGradientTolerance: return "gradient_tolerance";
    case Termination::kFunctionTolerance: return "function_tolerance";
    case Termination::kMaxIterations: return "max_iterations";
  }
  return "unknown";
}

namespace {

// Free parameters of one camera as a 9 x k basis over the full layout.
struct CameraBlock {
  int size = 0;
  int offset = 0;
  bool sphere_translation = false;
  Eigen::Matrix<double, kCameraParams, Eigen::Dynamic> basis;
};

class BundleProblem {
 public:
  BundleProblem(const SfmScene& scene, const BundleOptions& options)
      : options_(options), blocks_(scene.cameras.size()) {
    // The scale gauge holds |t1 + R1 * anchor| fixed, i.e. the distance from
    // camera 1 to the frozen camera 0 center. Unlike |t1| alone this does not
    // depend on where the world origin sits.
    if (options.fix_first_camera && !scene.cameras.empty()) anchor_ = CameraCenter(scene.cameras[0]);
    int offset = 0;
    for (size_t c = 0; c < scene.cameras.size(); ++c) {
      CameraBlock& b = blocks_[c];
      b.offset = offset;
      if (c == 0 && options.fix_first_camera) continue;
      b.sphere_translation = (c == 1 && options.fix_second_camera_scale);
      if (b.sphere_translation && !(BaselineVector(scene.cameras[1]).norm() > 0)) {
        Fail(ErrorCode::kInvalidConfig, "camera 1 coincides with camera 0; scale gauge undefined");
      }
      b.size = 3 + (b.sphere_translation ? 2 : 3) + (options.optimize_intrinsics ? 3 : 0);
      offset += b.size;
    }
    num_camera_params_ = offset;

    by_point_.resize(scene.points.size());
    for (size_t k = 0; k < scene.observations.size(); ++k) {
      const Observation& o = scene.observations[k];
      if (o.weight > 0) by_point_[o.point].push_back(static_cast<int>(k));
    }
    for (size_t p = 0; p < by_point_.size(); ++p) {
      if (by_point_[p].size() < 2) {
        Fail(ErrorCode::kUnderConstrained,
             "point " + std::to_string(p) + " has " + std::to_string(by_point_[p].size()) +
                 " weighted observations; at least 2 are required");
      }
    }
  }

  static double Objective(const SfmScene& scene) {
    double sum = 0;
    for (const Observation& o : scene.observations) {
      if (o.weight == 0) continue;
      const CameraParams& cam = scene.cameras[o.camera];
      const Vec3 Xc = AxisAngleToRotation(cam.rotation) * scene.points[o.point] + cam.translation;
      const Vec2 p = cam.focal * Xc.head<2>() / Xc.z() + cam.principal;
      sum += o.weight * (o.pixel - p).squaredNorm();
    }
    return std::isfinite(sum) ? sum : std::numeric_limits<double>::infinity();
  }

  // Builds J^T W J and J^T W e at `scene`. Returns the gradient inf-norm.
  double Linearize(const SfmScene& scene) {
    for (size_t c = 0; c < blocks_.size(); ++c) {
      CameraBlock& b = blocks_[c];
      b.basis.setZero(kCameraParams, b.size);
      if (b.size == 0) continue;
      b.basis.block<3, 3>(0, 0).setIdentity();
      int col = 3;
      if (b.sphere_translation) {
        // t1 = u - R1 * anchor with u on a sphere: rotating camera 1 drags
        // its translation along.
        const CameraParams& cam = scene.cameras[c];
        b.basis.block<3, 3>(3, 0) = -RotatedPointDerivative(
            cam.rotation, AxisAngleToRotation(cam.rotation), anchor_);
        const Vec3 u = BaselineVector(cam).normalized();
        const Vec3 helper = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        const Vec3 e1 = u.cross(helper).normalized();
        const Vec3 e2 = u.cross(e1);
        b.basis.block<3, 1>(3, col++) = e1;
        b.basis.block<3, 1>(3, col++) = e2;
      } else {
        b.basis.block<3, 3>(3, col).setIdentity();
        col += 3;
      }
      if (options_.optimize_intrinsics) b.basis.block<3, 3>(6, col).setIdentity();
    }

    U_.assign(blocks_.size(), Eigen::MatrixXd());
    bc_.assign(blocks_.size(), Eigen::VectorXd());
    for (size_t c = 0; c < blocks_.size(); ++c) {
      U_[c].setZero(blocks_[c].size, blocks_[c].size);
      bc_[c].setZero(blocks_[c].size);
    }
    V_.assign(scene.points.size(), Mat3::Zero());
    bp_.assign(scene.points.size(), Vec3::Zero());
    W_.assign(scene.observations.size(), Eigen::MatrixXd());

    double grad = 0;
    for (size_t k = 0; k < scene.observations.size(); ++k) {
      const Observation& o = scene.observations[k];
      if (o.weight == 0) continue;
      const ProjectionJacobian pj = ProjectionDerivatives(scene.cameras[o.camera], scene.points[o.point]);
      const Vec2 e = o.pixel - pj.projection;
      const CameraBlock& b = blocks_[o.camera];
      const Eigen::MatrixXd Jc = pj.camera * b.basis;
      U_[o.camera].noalias() += o.weight * Jc.transpose() * Jc;
      bc_[o.camera].noalias() += o.weight * Jc.transpose() * e;
      V_[o.point].noalias() += o.weight * pj.point.transpose() * pj.point;
      bp_[o.point].noalias() += o.weight * pj.point.transpose() * e;
      W_[k] = o.weight * Jc.transpose() * pj.point;
    }
    for (size_t c = 0; c < blocks_.size(); ++c) {
      for (int i = 0; i < blocks_[c].size; ++i) {
        if (!(U_[c](i, i) > 0)) {
          Fail(ErrorCode::kSingularSystem, "camera " + std::to_string(c) + " parameter " +
                                               std::to_string(i) + " is unconstrained");
        }
      }
      if (bc_[c].size() > 0) grad = std::max(grad, bc_[c].cwiseAbs().maxCoeff());
    }
    for (const Vec3& b : bp_) grad = std::max(grad, b.cwiseAbs().maxCoeff());
    return grad;
  }

  // Damped step; false when the reduced system cannot be solved.
  bool Solve(const SfmScene& scene, double lambda, Eigen::VectorXd& dc,
             std::vector<Vec3>& dp, double& predicted) const {
    const int nc = num_camera_params_;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nc, nc);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nc);
    for (size_t c = 0; c < blocks_.size(); ++c) {
      const CameraBlock& b = blocks_[c];
      if (b.size == 0) continue;
      Eigen::MatrixXd Ud = U_[c];
      Ud.diagonal() += lambda * U_[c].diagonal();
      S.block(b.offset, b.offset, b.size, b.size) = Ud;
      rhs.segment(b.offset, b.size) = bc_[c];
    }
    std::vector<Mat3> Vinv(V_.size());
    for (size_t p = 0; p < V_.size(); ++p) {
      Mat3 Vd = V_[p];
      Vd.diagonal() += lambda * V_[p].diagonal();
      Vinv[p] = Vd.inverse();
      const auto& obs = by_point_[p];
      for (int i : obs) {
        const CameraBlock& bi = blocks_[scene.observations[i].camera];
        if (bi.size == 0) continue;
        const Eigen::MatrixXd WV = W_[i] * Vinv[p];
        rhs.segment(bi.offset, bi.size).noalias() -= WV * bp_[p];
        for (int j : obs) {
          const CameraBlock& bj = blocks_[scene.observations[j].camera];
          if (bj.size == 0) continue;
          S.block(bi.offset, bj.offset, bi.size, bj.size).noalias() -= WV * W_[j].transpose();
        }
      }
    }
    dc = Eigen::VectorXd::Zero(nc);
    if (nc > 0) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
      if (ldlt.info() != Eigen::Success) return false;
      dc = ldlt.solve(rhs);
      if (!dc.allFinite()) return false;
    }
    dp.assign(V_.size(), Vec3::Zero());
    for (size_t p = 0; p < V_.size(); ++p) {
      Vec3 r = bp_[p];
      for (int i : by_point_[p]) {
        const CameraBlock& bi = blocks_[scene.observations[i].camera];
        if (bi.size == 0) continue;
        r.noalias() -= W_[i].transpose() * dc.segment(bi.offset, bi.size);
      }
      dp[p] = Vinv[p] * r;
      if (!dp[p].allFinite()) return false;
    }

    // Model decrease 2 d^T b - d^T H d with the undamped H.
    predicted = 0;
    for (size_t c = 0; c < blocks_.size(); ++c) {
      const CameraBlock& b = blocks_[c];
      if (b.size == 0) continue;
      const Eigen::VectorXd d = dc.segment(b.offset, b.size);
      predicted += 2 * d.dot(bc_[c]) - d.dot(U_[c] * d);
    }
    for (size_t p = 0; p < V_.size(); ++p) {
      predicted += 2 * dp[p].dot(bp_[p]) - dp[p].dot(V_[p] * dp[p]);
    }
    for (size_t k = 0; k < W_.size(); ++k) {
      if (W_[k].size() == 0) continue;
      const Observation& o = scene.observations[k];
      const CameraBlock& b = blocks_[o.camera];
      if (b.size == 0) continue;
      predicted -= 2 * dc.segment(b.offset, b.size).dot(W_[k] * dp[o.point]);
    }
    return true;
  }

  SfmScene Apply(const SfmScene& scene, const Eigen::VectorXd& dc,
                 const std::vector<Vec3>& dp) const {
    SfmScene out = scene;
    for (size_t c = 0; c < blocks_.size(); ++c) {
      const CameraBlock& b = blocks_[c];
      if (b.size == 0) continue;
      const Eigen::Matrix<double, kCameraParams, 1> full = b.basis * dc.segment(b.offset, b.size);
      CameraParams& cam = out.cameras[c];
      if (b.sphere_translation) {
        const Vec3 u = BaselineVector(cam);
        const Vec3 du = b.basis.block<3, 2>(3, 3) * dc.segment<2>(b.offset + 3);
        cam.rotation = CanonicalAxisAngle(cam.rotation + full.head<3>());
        cam.translation = u.norm() * (u + du).normalized() -
                          AxisAngleToRotation(cam.rotation) * anchor_;
      } else {
        cam.rotation = CanonicalAxisAngle(cam.rotation + full.head<3>());
        cam.translation += full.segment<3>(3);
      }
      if (options_.optimize_intrinsics) {
        cam.focal += full(6);
        cam.principal += full.tail<2>();
      }
    }
    for (size_t p = 0; p < out.points.size(); ++p) out.points[p] += dp[p];
    return out;
  }

 private:
  Vec3 BaselineVector(const CameraParams& cam) const {
    return cam.translation + AxisAngleToRotation(cam.rotation) * anchor_;
  }

  const BundleOptions& options_;
  Vec3 anchor_ = Vec3::Zero();
  std::vector<CameraBlock> blocks_;
  int num_camera_params_ = 0;
  std::vector<std::vector<int>> by_point_;
  std::vector<Eigen::MatrixXd> U_;
  std::vector<Eigen::VectorXd> bc_;
  std::vector<Mat3> V_;
  std::vector<Vec3> bp_;
  std::vector<Eigen::MatrixXd> W_;
};

}  // namespace

BundleResult BundleAdjust(const SfmScene& scene, const BundleOptions& options) {
  ValidateScene(scene);
  BundleProblem problem(scene, options);

  BundleResult result;
  result.scene = scene;
  BundleReport& report = result.report;
  double objective = BundleProblem::Objective(scene);
  report.initial_objective = objective;
  report.accepted_objectives.push_back(objective);
  report.termination = Termination::kMaxIterations;

  double lambda = options.initial_damping;
  bool relinearize = true;
  int iteration = 0;
  Eigen::VectorXd dc;
  std::vector<Vec3> dp;
  while (iteration < options.max_iterations) {
    if (relinearize) {
      const double grad = problem.Linearize(result.scene);
      if (objective == 0 || grad < options.gradient_tolerance) {
        report.termination = Termination::kGradientTolerance;
        break;
      }
      relinearize = false;
    }
    ++iteration;
    double predicted = 0;
    double candidate_objective = std::numeric_limits<double>::infinity();
    SfmScene candidate;
    if (problem.Solve(result.scene, lambda, dc, dp, predicted)) {
      candidate = problem.Apply(result.scene, dc, dp);
      candidate_objective = BundleProblem::Objective(candidate);
    }
    if (candidate_objective < objective) {
      const double decrease = objective - candidate_objective;
      result.scene = std::move(candidate);
      const double previous = objective;
      objective = candidate_objective;
      report.accepted_objectives.push_back(objective);
      ++report.accepted_steps;
      lambda = std::max(lambda * options.damping_decrease, 1e-15);
      relinearize = true;
      if (decrease < options.function_tolerance * previous) {
        report.termination = Termination::kFunctionTolerance;
        break;
      }
    } else {
      ++report.rejected_steps;
      // Nothing left that the local model can win.
      if (std::isfinite(candidate_objective) && predicted <= options.function_tolerance * objective) {
        report.termination = Termination::kFunctionTolerance;
        break;
      }
      lambda *= options.damping_increase;
      if (lambda > options.max_damping) {
        Fail(ErrorCode::kDivergenceDetected,
             "damping exceeded " + std::to_string(options.max_damping) + " at iteration " +
                 std::to_string(iteration));
      }
    }
  }
  report.iterations = iteration;
  report.final_objective = objective;
  report.final_damping = lambda;
  return result;
}

TurntableScene GenerateTurntableScene(const TurntableConfig& config,
                                      std::span<const Vec3> object_points) {
  if (config.n_views < 2) Fail(ErrorCode::kInvalidConfig, "need at least two views");
  if (config.enforce_elevation_range &&
      (config.elevation_deg < 30.0 || config.elevation_deg > 45.0)) {
    Fail(ErrorCode::kInvalidConfig, "elevation must lie in [30, 45] degrees");
  }
  if (!(config.elevation_deg > -90.0 && config.elevation_deg < 90.0)) {
    Fail(ErrorCode::kInvalidConfig, "elevation must lie strictly inside (-90, 90)");
  }
  if (!(config.camera_distance > 0) || !(config.focal > 0) || config.pixel_noise_std < 0 ||
      config.image_width < 1 || config.image_height < 1) {
    Fail(ErrorCode::kInvalidConfig, "invalid camera distance, focal, noise, or image size");
  }
  if (object_points.empty()) Fail(ErrorCode::kInvalidConfig, "no object points");
  for (const Vec3& p : object_points) {
    if (!(p.norm() < config.camera_distance)) {
      Fail(ErrorCode::kInvalidConfig, "object points must lie inside the camera circle");
    }
  }

  TurntableScene out;
  const double el = config.elevation_deg * std::numbers::pi / 180.0;
  for (int k = 0; k < config.n_views; ++k) {
    const double az = 2.0 * std::numbers::pi * k / config.n_views;
    const Vec3 center = config.camera_distance *
                        Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    const Vec3 z = -center.normalized();
    const Vec3 up = Vec3::UnitZ();
    const Vec3 y = -(up - up.dot(z) * z).normalized();
    const Vec3 x = y.cross(z);
    Mat3 R;
    R.row(0) = x;
    R.row(1) = y;
    R.row(2) = z;
    CameraParams cam;
    cam.focal = config.focal;
    cam.principal = Vec2(0.5 * config.image_width, 0.5 * config.image_height);
    cam.rotation = RotationToAxisAngle(R);
    cam.translation = -(AxisAngleToRotation(cam.rotation) * center);
    out.scene.cameras.push_back(cam);
  }
  out.scene.points.assign(object_points.begin(), object_points.end());

  // Visibility.
  std::vector<std::vector<char>> visible(config.n_views,
                                         std::vector<char>(object_points.size(), 1));
  if (config.occlusion) {
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : object_points) centroid += p;
    centroid /= static_cast<double>(object_points.size());
    for (size_t j = 0; j < object_points.size(); ++j) {
      const Vec3 normal = (object_points[j] - centroid).normalized();
      std::vector<std::pair<double, int>> facing;
      int count = 0;
      for (int i = 0; i < config.n_views; ++i) {
        const Vec3 to_cam = (CameraCenter(out.scene.cameras[i]) - object_points[j]).normalized();
        const double cosine = normal.dot(to_cam);
        facing.emplace_back(-cosine, i);
        visible[i][j] = cosine > 0;
        count += visible[i][j];
      }
      if (count < 2) {
        std::sort(facing.begin(), facing.end());
        visible[facing[0].second][j] = 1;
        visible[facing[1].second][j] = 1;
      }
    }
  }

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < config.n_views; ++i) {
    for (size_t j = 0; j < object_points.size(); ++j) {
      if (!visible[i][j]) continue;
      Observation o;
      o.camera = i;
      o.point = static_cast<int>(j);
      o.pixel = ProjectPoint(out.scene.cameras[i], object_points[j]);
      if (config.pixel_noise_std > 0) {
        const double dx = noise(rng);
        const double dy = noise(rng);
        o.pixel += config.pixel_noise_std * Vec2(dx, dy);
      }
      out.scene.observations.push_back(o);
    }
  }
  out.true_cameras = out.scene.cameras;
  out.true_points = out.scene.points;
  return out;
}

std::vector<Vec3> SampleEllipsoidPoints(int n, const Vec3& semi_axes, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) pts.push_back(RandomUnit(rng).cwiseProduct(semi_axes));
  return pts;
}

int AddClutterObservations(SfmScene& scene, double fraction, int image_width,
                           int image_height, uint64_t seed) {
  if (fraction < 0) Fail(ErrorCode::kInvalidConfig, "clutter fraction must be non-negative");
  std::set<std::pair<int, int>> observed;
  for (const Observation& o : scene.observations) observed.emplace(o.camera, o.point);
  std::vector<std::pair<int, int>> free_pairs;
  for (int i = 0; i < static_cast<int>(scene.cameras.size()); ++i) {
    for (int j = 0; j < static_cast<int>(scene.points.size()); ++j) {
      if (!observed.count({i, j})) free_pairs.emplace_back(i, j);
    }
  }
  const int count = static_cast<int>(std::lround(fraction * scene.observations.size()));
  if (count > static_cast<int>(free_pairs.size())) {
    Fail(ErrorCode::kInvalidConfig, "not enough unobserved pairs for the requested clutter");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(free_pairs.begin(), free_pairs.end(), rng);
  std::uniform_real_distribution<double> ux(0.0, image_width);
  std::uniform_real_distribution<double> uy(0.0, image_height);
  for (int k = 0; k < count; ++k) {
    Observation o;
    o.camera = free_pairs[k].first;
    o.point = free_pairs[k].second;
    const double px = ux(rng);
    const double py = uy(rng);
    o.pixel = Vec2(px, py);
    o.weight = 0.0;
    scene.observations.push_back(o);
  }
  return count;
}

SfmScene PerturbScene(const SfmScene& scene, const PerturbConfig& config) {
  SfmScene out = scene;
  std::mt19937_64 rng(config.seed);
  const double angle = config.rotation_deg * std::numbers::pi / 180.0;
  for (size_t c = 0; c < out.cameras.size(); ++c) {
    if (c == 0 && config.skip_first_camera) continue;
    CameraParams& cam = out.cameras[c];
    const Vec3 axis = RandomUnit(rng);
    const Vec3 dir = RandomUnit(rng);
    const Mat3 R = Eigen::AngleAxisd(angle, axis).toRotationMatrix() * AxisAngleToRotation(cam.rotation);
    cam.rotation = RotationToAxisAngle(R);
    cam.translation += config.translation_fraction * cam.translation.norm() * dir;
  }
  const double diameter = out.points.size() >= 2 ? CaliperDiameter(out.points) : 0.0;
  for (Vec3& p : out.points) p += config.point_fraction * diameter * RandomUnit(rng);
  return out;
}

SfmScene TransformScene(const SfmScene& scene, const Mat3& rotation,
                        const Vec3& translation, double scale) {
  SfmScene out = scene;
  for (Vec3& p : out.points) p = scale * (rotation * p) + translation;
  for (CameraParams& cam : out.cameras) {
    const Mat3 R = AxisAngleToRotation(cam.rotation) * rotation.transpose();
    cam.rotation = RotationToAxisAngle(R);
    cam.translation = scale * cam.translation - R * translation;
  }
  return out;
}

}  // namespace aggmorph
