#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "aggmorph/mesh_geometry.h"

namespace aggmorph {

using Mat34 = Eigen::Matrix<double, 3, 4>;

// Pinhole camera without distortion. World point X maps to the camera frame
// by R(rotation) * X + translation, where rotation is an axis-angle vector.
struct CameraParams {
  double focal = 1000.0;
  Vec2 principal = Vec2::Zero();
  Vec3 rotation = Vec3::Zero();
  Vec3 translation = Vec3::Zero();
};

// Camera parameter slots in the full 9-vector layout.
inline constexpr int kCameraParams = 9;  // rx ry rz tx ty tz f cx cy

Mat3 AxisAngleToRotation(const Vec3& axis_angle);
Vec3 RotationToAxisAngle(const Mat3& rotation);

// K [R | t].
Mat34 ProjectionMatrix(const CameraParams& camera);

// Dehomogenized P [X; 1]. Throws kAtInfinity when |w| <= 1e-12.
Vec2 Project(const Mat34& P, const Vec3& X);

// Same model evaluated from the parameters directly; throws kBehindCamera
// for points with non-positive depth.
Vec2 ProjectPoint(const CameraParams& camera, const Vec3& X);

Vec3 CameraCenter(const CameraParams& camera);

struct Observation {
  int camera = 0;
  int point = 0;
  Vec2 pixel = Vec2::Zero();
  double weight = 1.0;  // mask value in [0, 1]
};

struct SfmScene {
  std::vector<CameraParams> cameras;
  std::vector<Vec3> points;
  std::vector<Observation> observations;
};

// Checks indices, weights and duplicate (camera, point) pairs.
void ValidateScene(const SfmScene& scene);

// Sum of squared reprojection errors over every observation, ignoring masks.
double TotalError(const SfmScene& scene);

// Sum of mask-weighted squared reprojection errors.
double MaskedError(const SfmScene& scene);

// sqrt(w) * (observed - projected), two entries per observation.
Eigen::VectorXd MaskedResiduals(const SfmScene& scene);

// Derivatives of the projection with respect to the 9 camera parameters and
// the 3 point coordinates.
struct ProjectionJacobian {
  Vec2 projection = Vec2::Zero();
  Eigen::Matrix<double, 2, kCameraParams> camera;
  Eigen::Matrix<double, 2, 3> point;
};

ProjectionJacobian ProjectionDerivatives(const CameraParams& camera,
                                         const Vec3& X);

// Dense Jacobian of MaskedResiduals in the full layout: 9 columns per camera
// followed by 3 per point. Intended for verification on small scenes.
Eigen::MatrixXd MaskedResidualJacobian(const SfmScene& scene);

struct BundleOptions {
  int max_iterations = 100;
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 0.1;
  double max_damping = 1e12;
  double function_tolerance = 1e-10;  // relative objective change
  double gradient_tolerance = 1e-8;   // infinity norm
  bool optimize_intrinsics = false;
  // Gauge: camera 0 frozen, distance from camera 1 to camera 0 held fixed
  // (the norm of camera 1's translation relative to camera 0).
  bool fix_first_camera = true;
  bool fix_second_camera_scale = true;
};

enum class Termination {
  kGradientTolerance,
  kFunctionTolerance,
  kMaxIterations,
};

std::string_view TerminationName(Termination t);

struct BundleReport {
  int iterations = 0;
  int accepted_steps = 0;
  int rejected_steps = 0;
  double initial_objective = 0;
  double final_objective = 0;
  double final_damping = 0;
  Termination termination = Termination::kMaxIterations;
  // Objective after initialization and after every accepted step.
  std::vector<double> accepted_objectives;
};

struct BundleResult {
  SfmScene scene;
  BundleReport report;
};

// Levenberg-Marquardt on MaskedError over the free camera parameters and all
// points, solved through the Schur complement on the point blocks.
BundleResult BundleAdjust(const SfmScene& scene, const BundleOptions& options = {});

// --- Synthetic turntable scenes ------------------------------------------

struct TurntableConfig {
  int n_views = 12;
  double elevation_deg = 35.0;
  double camera_distance = 10.0;
  double pixel_noise_std = 0.0;
  uint64_t seed = 0;
  double focal = 1000.0;
  int image_width = 1024;
  int image_height = 1024;
  // Rig range from the acquisition setup; disable for other elevations.
  bool enforce_elevation_range = true;
  // Back-facing points (relative to the point-set centroid) are not
  // observed; every point keeps at least its two best-facing views.
  bool occlusion = false;
};

struct TurntableScene {
  SfmScene scene;  // cameras and points at ground truth, noisy pixels
  std::vector<CameraParams> true_cameras;
  std::vector<Vec3> true_points;
};

// Cameras equally spaced in azimuth on a circle at the given elevation, all
// looking at the origin with world +z up.
TurntableScene GenerateTurntableScene(const TurntableConfig& config,
                                      std::span<const Vec3> object_points);

// n points sampled uniformly in angle on an ellipsoid surface.
std::vector<Vec3> SampleEllipsoidPoints(int n, const Vec3& semi_axes,
                                        uint64_t seed);

// Adds round(fraction * #observations) zero-weight observations at random
// pixels on (camera, point) pairs that were not observed. Returns how many
// were added.
int AddClutterObservations(SfmScene& scene, double fraction, int image_width,
                           int image_height, uint64_t seed);

struct PerturbConfig {
  double rotation_deg = 2.0;
  double translation_fraction = 0.02;
  double point_fraction = 0.01;  // of the point-set diameter
  uint64_t seed = 0;
  bool skip_first_camera = true;
};

// Random pose and point perturbation for initializing optimizations.
SfmScene PerturbScene(const SfmScene& scene, const PerturbConfig& config);

// Applies x -> s R x + t to the world: points move, cameras are re-posed so
// every projection is unchanged.
SfmScene TransformScene(const SfmScene& scene, const Mat3& rotation,
                        const Vec3& translation, double scale);

}  // namespace aggmorph
