#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "aggmorph/mesh_geometry.h"

namespace aggmorph {

// Binary foreground grid, row-major, row 0 at the top.
struct RasterMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;       // 1 = foreground
  std::optional<double> pixel_pitch;  // cm per pixel, when known

  RasterMask() = default;
  RasterMask(int w, int h);

  bool at(int col, int row) const { return pixels[row * width + col] != 0; }
  void set(int col, int row, bool value) {
    pixels[row * width + col] = value ? 1 : 0;
  }
  size_t CountForeground() const;
};

// Closed loop, counter-clockwise (positive signed area) in its own x/y frame.
// Units are cm when the source mask had a pixel pitch, pixels otherwise.
struct SilhouettePolygon {
  std::vector<Vec2> vertices;
};

enum class ProjectionMode { kOrthographic, kPinhole };

// Synthetic view of a particle. The camera frame follows the usual vision
// convention: image x to the right, y down, z along `direction`.
struct ViewCamera {
  ProjectionMode mode = ProjectionMode::kOrthographic;
  Vec3 direction = Vec3::UnitZ();  // unit viewing direction
  Vec3 up = Vec3::UnitY();         // approximate world up in the image
  // Orthographic: world point imaged at the image center.
  // Pinhole: camera center.
  Vec3 position = Vec3::Zero();
  int width = 1024;
  int height = 1024;
  double pixel_pitch = 1.0;  // orthographic world units per pixel
  double focal = 1000.0;     // pinhole, pixels
  Vec2 principal = Vec2(512.0, 512.0);
};

// Orthographic turntable view: looks at the bounding-box center of `mesh`
// from azimuth/elevation (degrees), with the bounding sphere filling
// (1 - margin) of the frame.
ViewCamera TurntableView(const TriangleMesh& mesh, double azimuth_deg,
                         double elevation_deg, int resolution,
                         double margin = 0.05);

// Pixel (col, row) is foreground iff its center lies inside at least one
// projected triangle. The mask inherits the camera pixel pitch for
// orthographic views.
RasterMask RenderSilhouette(const TriangleMesh& mesh, const ViewCamera& camera);

// Outer contour of the largest 4-connected foreground component, traced by
// marching squares at iso-level 0.5 over pixel centers. Holes are filled.
SilhouettePolygon TraceBoundary(const RasterMask& mask);

struct PolygonMetrics {
  double area = 0;
  double perimeter = 0;
};

// Throws kSelfIntersecting for non-simple loops.
PolygonMetrics ComputePolygonMetrics(const SilhouettePolygon& poly);

// Throws kSelfIntersecting when any two non-adjacent edges touch.
void CheckSimple(const SilhouettePolygon& poly);

double SignedArea(const SilhouettePolygon& poly);

struct FeretResult {
  double length = 0;
  double angle = 0;  // direction of the attaining chord, in [0, pi)
};

// Longest caliper diameter over all orientations, found on the convex hull
// by rotating calipers. Ties resolve to the smallest direction angle.
FeretResult MaxFeret(const SilhouettePolygon& poly);

// Projection extent of the polygon perpendicular to `angle`.
double MinFeretPerpendicular(const SilhouettePolygon& poly, double angle);

double Fer2d(double l_max, double l_min);

double Circularity2d(double area, double perimeter);

// Everything the comparative analysis needs from one view.
struct ViewMetrics {
  double area = 0;
  double perimeter = 0;
  double l_max = 0;
  double l_max_angle = 0;
  double l_min = 0;
  double fer_2d = 0;
  double circularity = 0;
};

ViewMetrics AnalyzeSilhouette(const SilhouettePolygon& poly);

// Renders n_views orthographic views at azimuths k * 360 / n_views and the
// given elevation, and analyzes each silhouette.
std::vector<ViewMetrics> AnalyzeTurntableViews(const TriangleMesh& mesh, int n_views,
                                               double elevation_deg, int resolution);

}  // namespace aggmorph
