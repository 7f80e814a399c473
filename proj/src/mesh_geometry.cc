#include "aggmorph/mesh_geometry.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include <Eigen/Geometry>

#include "aggmorph/error.h"

namespace aggmorph {
namespace {

uint64_t EdgeKey(int a, int b) {
  const auto lo = static_cast<uint64_t>(std::min(a, b));
  const auto hi = static_cast<uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

std::string EdgeName(int a, int b) {
  std::ostringstream os;
  os << "edge (" << std::min(a, b) << ", " << std::max(a, b) << ")";
  return os.str();
}

// Faces incident to one undirected edge, with the direction each traverses.
struct EdgeUse {
  int faces[2] = {-1, -1};
  bool forward[2] = {false, false};  // true when the face walks lo -> hi
  int count = 0;
};

using EdgeMap = std::unordered_map<uint64_t, EdgeUse>;

EdgeMap BuildEdgeMap(const TriangleMesh& mesh) {
  EdgeMap edges;
  edges.reserve(mesh.faces.size() * 2);
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    for (int k = 0; k < 3; ++k) {
      const int a = face[k];
      const int b = face[(k + 1) % 3];
      EdgeUse& use = edges[EdgeKey(a, b)];
      if (use.count < 2) {
        use.faces[use.count] = static_cast<int>(f);
        use.forward[use.count] = a < b;
      }
      ++use.count;
    }
  }
  return edges;
}

Vec3 VertexCentroid(const TriangleMesh& mesh) {
  Vec3 sum = Vec3::Zero();
  for (const Vec3& v : mesh.vertices) sum += v;
  return sum / static_cast<double>(mesh.vertices.size());
}

double RawSignedVolume(const TriangleMesh& mesh) {
  // Tetrahedra against the vertex centroid rather than the origin; the sum
  // is the same for a closed surface but far better conditioned.
  const Vec3 ref = VertexCentroid(mesh);
  double six_volume = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3 a = mesh.vertices[f[0]] - ref;
    const Vec3 b = mesh.vertices[f[1]] - ref;
    const Vec3 c = mesh.vertices[f[2]] - ref;
    six_volume += a.dot(b.cross(c));
  }
  return six_volume / 6.0;
}

double FaceArea(const TriangleMesh& mesh, const std::array<int, 3>& f) {
  const Vec3& a = mesh.vertices[f[0]];
  return 0.5 * (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).norm();
}

}  // namespace

bool OrientedBox::Contains(const Vec3& p, double tolerance) const {
  for (int k = 0; k < 3; ++k) {
    if (std::abs(axes[k].dot(p - center)) > 0.5 * extents[k] + tolerance) {
      return false;
    }
  }
  return true;
}

void ValidateMesh(const TriangleMesh& mesh) {
  if (mesh.vertices.empty() || mesh.faces.empty()) {
    Fail(ErrorCode::kEmptyMesh, "mesh has no vertices or no faces");
  }
  const int n = static_cast<int>(mesh.vertices.size());
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    for (int idx : face) {
      if (idx < 0 || idx >= n) {
        Fail(ErrorCode::kInvalidIndex, "face " + std::to_string(f) +
                                           " references vertex " +
                                           std::to_string(idx));
      }
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      Fail(ErrorCode::kDegenerateFace,
           "face " + std::to_string(f) + " repeats a vertex");
    }
    if (FaceArea(mesh, face) <= kMinFaceArea) {
      Fail(ErrorCode::kDegenerateFace,
           "face " + std::to_string(f) + " has zero area");
    }
  }
  for (const auto& [key, use] : BuildEdgeMap(mesh)) {
    if (use.count != 2) {
      const int lo = static_cast<int>(key & 0xffffffffu);
      const int hi = static_cast<int>(key >> 32);
      Fail(ErrorCode::kNonWatertight, EdgeName(lo, hi) + " is shared by " +
                                          std::to_string(use.count) +
                                          " faces");
    }
  }
}

bool IsConsistentlyOriented(const TriangleMesh& mesh) {
  for (const auto& [key, use] : BuildEdgeMap(mesh)) {
    if (use.count == 2 && use.forward[0] == use.forward[1]) return false;
  }
  return true;
}

TriangleMesh OrientOutward(const TriangleMesh& mesh) {
  ValidateMesh(mesh);
  const EdgeMap edges = BuildEdgeMap(mesh);
  const size_t num_faces = mesh.faces.size();

  // flip[f]: 0 keep, 1 flip, -1 unvisited.
  std::vector<int> flip(num_faces, -1);
  std::vector<int> component(num_faces, -1);
  int num_components = 0;
  for (size_t seed = 0; seed < num_faces; ++seed) {
    if (flip[seed] != -1) continue;
    const int comp = num_components++;
    flip[seed] = 0;
    component[seed] = comp;
    std::deque<int> queue = {static_cast<int>(seed)};
    while (!queue.empty()) {
      const int f = queue.front();
      queue.pop_front();
      const auto& face = mesh.faces[f];
      for (int k = 0; k < 3; ++k) {
        const int a = face[k];
        const int b = face[(k + 1) % 3];
        const EdgeUse& use = edges.at(EdgeKey(a, b));
        const int slot = use.faces[0] == f ? 0 : 1;
        const int g = use.faces[1 - slot];
        // After applying flips, the two faces must walk the edge in
        // opposite directions.
        const bool f_forward = use.forward[slot] != (flip[f] == 1);
        const bool g_forward_raw = use.forward[1 - slot];
        const int needed = (g_forward_raw == f_forward) ? 1 : 0;
        if (flip[g] == -1) {
          flip[g] = needed;
          component[g] = comp;
          queue.push_back(g);
        } else if (flip[g] != needed) {
          Fail(ErrorCode::kInconsistentOrientation,
               EdgeName(a, b) + " cannot be oriented consistently "
                                "(non-orientable surface)");
        }
      }
    }
  }

  TriangleMesh out = mesh;
  for (size_t f = 0; f < num_faces; ++f) {
    if (flip[f] == 1) std::swap(out.faces[f][1], out.faces[f][2]);
  }
  // Per-component sign so nested or disjoint shells each point outward.
  std::vector<double> six_volume(num_components, 0.0);
  const Vec3 ref = VertexCentroid(out);
  for (size_t f = 0; f < num_faces; ++f) {
    const auto& face = out.faces[f];
    const Vec3 a = out.vertices[face[0]] - ref;
    const Vec3 b = out.vertices[face[1]] - ref;
    const Vec3 c = out.vertices[face[2]] - ref;
    six_volume[component[f]] += a.dot(b.cross(c));
  }
  for (size_t f = 0; f < num_faces; ++f) {
    if (six_volume[component[f]] < 0) {
      std::swap(out.faces[f][1], out.faces[f][2]);
    }
  }
  return out;
}

double SignedVolume(const TriangleMesh& mesh) {
  ValidateMesh(mesh);
  if (IsConsistentlyOriented(mesh)) return RawSignedVolume(mesh);
  return RawSignedVolume(OrientOutward(mesh));
}

double SurfaceArea(const TriangleMesh& mesh) {
  ValidateMesh(mesh);
  if (!IsConsistentlyOriented(mesh)) {
    // Surfaces that cannot be repaired are rejected just like SignedVolume.
    OrientOutward(mesh);
  }
  double area = 0.0;
  for (const auto& f : mesh.faces) area += FaceArea(mesh, f);
  return area;
}

double Fer3d(const OrientedBox& box) {
  const double a = box.extents.minCoeff();
  const double c = box.extents.maxCoeff();
  if (!(a > 0.0)) Fail(ErrorCode::kZeroExtent, "box has a zero extent");
  return c / a;
}

double Sphericity3d(double volume, double area) {
  if (!(volume > 0.0) || !(area > 0.0)) {
    Fail(ErrorCode::kNonPositiveInput,
         "sphericity needs positive volume and area");
  }
  return std::cbrt(36.0 * std::numbers::pi * volume * volume) / area;
}

double CaliperDiameter(std::span<const Vec3> points) {
  if (points.size() < 2) {
    Fail(ErrorCode::kInsufficientPoints,
         "caliper diameter needs at least two points");
  }
  auto brute_force = [](std::span<const Vec3> pts) {
    double best = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
      for (size_t j = i + 1; j < pts.size(); ++j) {
        best = std::max(best, (pts[i] - pts[j]).norm());
      }
    }
    return best;
  };
  if (points.size() <= 64) return brute_force(points);
  // The farthest pair is always a pair of hull vertices.
  try {
    const TriangleMesh hull = ConvexHull(points);
    return brute_force(hull.vertices);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateInput) throw;
    return brute_force(points);
  }
}

ShapeMetrics3d ComputeShapeMetrics(double volume, double area,
                                   const OrientedBox& box) {
  ShapeMetrics3d m;
  m.volume = volume;
  m.area = area;
  m.a = box.extents[0];
  m.b = box.extents[1];
  m.c = box.extents[2];
  m.fer_3d = Fer3d(box);
  m.sphericity = Sphericity3d(volume, area);
  m.c_over_b = m.c / m.b;
  m.b_over_a = m.b / m.a;
  return m;
}

ShapeMetrics3d AnalyzeMesh(const TriangleMesh& mesh) {
  const TriangleMesh oriented = OrientOutward(mesh);
  const double volume = RawSignedVolume(oriented);
  double area = 0.0;
  for (const auto& f : oriented.faces) area += FaceArea(oriented, f);
  return ComputeShapeMetrics(volume, area, MinVolumeObb(oriented.vertices));
}

ShapeMetrics3d ScaleShapeMetrics(const ShapeMetrics3d& metrics,
                                 double length_factor) {
  return ScaleShapeMetrics(metrics, length_factor,
                           length_factor * length_factor,
                           length_factor * length_factor * length_factor);
}

ShapeMetrics3d ScaleShapeMetrics(const ShapeMetrics3d& metrics,
                                 double length_factor, double area_factor,
                                 double volume_factor) {
  ShapeMetrics3d out = metrics;
  out.volume = metrics.volume * volume_factor;
  out.area = metrics.area * area_factor;
  out.a = metrics.a * length_factor;
  out.b = metrics.b * length_factor;
  out.c = metrics.c * length_factor;
  return out;
}

}  // namespace aggmorph
