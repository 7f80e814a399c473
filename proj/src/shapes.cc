#include "aggmorph/shapes.h"

#include <cmath>
#include <map>
#include <random>
#include <utility>

#include <Eigen/Geometry>

namespace aggmorph {

TriangleMesh MakeBox(const Vec3& extents, const Vec3& origin) {
  TriangleMesh mesh;
  for (int i = 0; i < 8; ++i) {
    mesh.vertices.push_back(origin + Vec3((i & 1) ? extents.x() : 0.0,
                                          (i & 2) ? extents.y() : 0.0,
                                          (i & 4) ? extents.z() : 0.0));
  }
  mesh.faces = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6},
                {0, 1, 4}, {1, 5, 4}, {2, 6, 3}, {3, 6, 7},
                {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return mesh;
}

TriangleMesh MakeTetrahedron(const Vec3& p0, const Vec3& p1, const Vec3& p2,
                             const Vec3& p3) {
  TriangleMesh mesh;
  mesh.vertices = {p0, p1, p2, p3};
  mesh.faces = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}};
  if ((p1 - p0).cross(p2 - p0).dot(p3 - p0) < 0) {
    for (auto& f : mesh.faces) std::swap(f[1], f[2]);
  }
  return mesh;
}

TriangleMesh MakeRegularTetrahedron(double edge) {
  const double s = edge / (2.0 * std::sqrt(2.0));
  return MakeTetrahedron(Vec3(s, s, s), Vec3(s, -s, -s), Vec3(-s, s, -s),
                         Vec3(-s, -s, s));
}

TriangleMesh MakeIcosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh mesh;
  mesh.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                   {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                   {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : mesh.vertices) v.normalize();
  mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int id = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(
          (mesh.vertices[a] + mesh.vertices[b]).normalized());
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(next);
  }
  for (Vec3& v : mesh.vertices) v *= radius;
  return mesh;
}

TriangleMesh MakeEllipsoid(const Vec3& semi_axes, int subdivisions) {
  TriangleMesh mesh = MakeIcosphere(1.0, subdivisions);
  for (Vec3& v : mesh.vertices) v = v.cwiseProduct(semi_axes);
  return mesh;
}

TriangleMesh TransformMesh(const TriangleMesh& mesh, const Mat3& rotation,
                           const Vec3& translation, double scale) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = scale * (rotation * v) + translation;
  return out;
}

Mat3 RandomRotation(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
  q.normalize();
  return q.toRotationMatrix();
}

}  // namespace aggmorph
