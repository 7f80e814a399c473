#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace aggmorph {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Closed triangle surface of a particle. Lengths are in centimeters unless a
// caller explicitly works in reconstruction-local units.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

// Box with orthonormal axes and extents sorted a <= b <= c; axes[k] is the
// direction of extents[k].
struct OrientedBox {
  Vec3 center = Vec3::Zero();
  std::array<Vec3, 3> axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  Vec3 extents = Vec3::Zero();

  double volume() const { return extents.prod(); }
  bool Contains(const Vec3& p, double tolerance) const;
};

// Faces whose area falls at or below this are rejected by ValidateMesh.
inline constexpr double kMinFaceArea = 1e-12;

// Checks index validity, face areas, and that every undirected edge is
// shared by exactly two faces. Throws kNonWatertight naming the edge.
void ValidateMesh(const TriangleMesh& mesh);

// True when every shared edge is traversed in opposite directions by its two
// faces. Assumes ValidateMesh passed.
bool IsConsistentlyOriented(const TriangleMesh& mesh);

// Re-orients faces by breadth-first propagation over shared edges, then flips
// each connected component so its enclosed volume is positive. Throws
// kInconsistentOrientation (naming an edge) for non-orientable input.
TriangleMesh OrientOutward(const TriangleMesh& mesh);

// Enclosed volume from signed tetrahedra. A consistently oriented mesh is
// summed as given (negative when the faces point inward); an inconsistent
// but repairable mesh is repaired to outward orientation first.
double SignedVolume(const TriangleMesh& mesh);

double SurfaceArea(const TriangleMesh& mesh);

// Convex hull of a point set as a watertight, outward-oriented mesh holding
// only the hull vertices. Throws kDegenerateInput for coincident, collinear,
// or coplanar input (relative tolerance 1e-9 of the point-set diameter).
TriangleMesh ConvexHull(std::span<const Vec3> points);

struct ObbOptions {
  // Half-width and step of the local refinement grid around the best
  // hull-face candidate, in degrees.
  double refine_half_range_deg = 5.0;
  double refine_step_deg = 0.25;
  int max_refine_rounds = 3;
};

// Approximate minimum-volume enclosing box: every hull-face normal is tried
// as a box axis with an exact minimum-area rectangle in the perpendicular
// plane, then the best axis is refined on a local angular grid.
OrientedBox MinVolumeObb(std::span<const Vec3> points,
                         const ObbOptions& options = {});

// c / a of the box.
double Fer3d(const OrientedBox& box);

// Wadell sphericity (36 pi V^2)^(1/3) / A.
double Sphericity3d(double volume, double area);

// Largest pairwise distance of the point set.
double CaliperDiameter(std::span<const Vec3> points);

// The 3D block of a particle's morphology.
struct ShapeMetrics3d {
  double volume = 0;
  double area = 0;
  double a = 0;
  double b = 0;
  double c = 0;
  double fer_3d = 0;
  double sphericity = 0;
  double c_over_b = 0;
  double b_over_a = 0;
};

ShapeMetrics3d ComputeShapeMetrics(double volume, double area,
                                   const OrientedBox& box);

// Full 3D analysis of a particle surface (orientation repaired if needed).
ShapeMetrics3d AnalyzeMesh(const TriangleMesh& mesh);

// Converts dimensional fields by a uniform length factor (volume by
// factor^3, area by factor^2). Ratios are copied untouched, so they stay
// bit-identical across unit changes and scale calibration.
ShapeMetrics3d ScaleShapeMetrics(const ShapeMetrics3d& metrics,
                                 double length_factor);

// Same as above with explicitly supplied area and volume factors, for units
// whose powers are known exactly (e.g. mm -> cm: 0.1, 0.01, 0.001).
ShapeMetrics3d ScaleShapeMetrics(const ShapeMetrics3d& metrics,
                                 double length_factor, double area_factor,
                                 double volume_factor);

}  // namespace aggmorph
