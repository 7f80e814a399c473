// Incremental 3D convex hull with per-face outside sets (quickhull order:
// always extend towards the farthest outside point of some face).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

#include <Eigen/Geometry>

#include "aggmorph/error.h"
#include "aggmorph/mesh_geometry.h"

namespace aggmorph {
namespace {

struct HullFace {
  std::array<int, 3> v;
  Vec3 normal;
  double offset = 0;  // plane: normal . x = offset
  std::vector<int> outside;
  bool alive = true;
};

uint64_t DirectedKey(int a, int b) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) |
         static_cast<uint32_t>(b);
}

class HullBuilder {
 public:
  HullBuilder(std::span<const Vec3> points, double eps)
      : points_(points), eps_(eps) {}

  TriangleMesh Build(const std::array<int, 4>& simplex) {
    const Vec3 interior = 0.25 * (points_[simplex[0]] + points_[simplex[1]] +
                                  points_[simplex[2]] + points_[simplex[3]]);
    interior_ = interior;
    const int tri[4][3] = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
    for (const auto& t : tri) {
      AddFace(simplex[t[0]], simplex[t[1]], simplex[t[2]]);
    }
    std::vector<int> all(points_.size());
    for (size_t i = 0; i < points_.size(); ++i) all[i] = static_cast<int>(i);
    std::vector<int> initial = {0, 1, 2, 3};
    Distribute(all, initial, simplex);

    std::vector<int> stack = initial;
    while (!stack.empty()) {
      const int f = stack.back();
      stack.pop_back();
      if (!faces_[f].alive || faces_[f].outside.empty()) continue;
      Extend(f, stack);
    }
    return Export();
  }

 private:
  double Distance(const HullFace& face, int p) const {
    return face.normal.dot(points_[p]) - face.offset;
  }

  int AddFace(int a, int b, int c) {
    HullFace face;
    face.v = {a, b, c};
    const Vec3& pa = points_[a];
    Vec3 n = (points_[b] - pa).cross(points_[c] - pa);
    const double len = n.norm();
    n = len > 0 ? Vec3(n / len) : Vec3::Zero();
    face.normal = n;
    face.offset = n.dot(pa);
    // The initial simplex may need flipping; later faces inherit the
    // horizon orientation and are already outward.
    if (face.normal.dot(interior_) - face.offset > 0) {
      std::swap(face.v[1], face.v[2]);
      face.normal = -face.normal;
      face.offset = -face.offset;
    }
    const int id = static_cast<int>(faces_.size());
    for (int k = 0; k < 3; ++k) {
      edge_owner_[DirectedKey(face.v[k], face.v[(k + 1) % 3])] = id;
    }
    faces_.push_back(std::move(face));
    return id;
  }

  void Distribute(const std::vector<int>& candidates,
                  const std::vector<int>& new_faces,
                  std::span<const int> skip) {
    for (int p : candidates) {
      if (std::find(skip.begin(), skip.end(), p) != skip.end()) continue;
      for (int f : new_faces) {
        if (Distance(faces_[f], p) > eps_) {
          faces_[f].outside.push_back(p);
          break;
        }
      }
    }
  }

  void Extend(int start, std::vector<int>& stack) {
    // Farthest outside point of the face becomes the eye.
    int eye = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int p : faces_[start].outside) {
      const double d = Distance(faces_[start], p);
      if (d > best) {
        best = d;
        eye = p;
      }
    }

    // Visible region by flood fill from the start face.
    std::vector<int> visible = {start};
    std::vector<char> is_visible(faces_.size(), 0);
    is_visible[start] = 1;
    std::vector<std::pair<int, int>> horizon;
    for (size_t i = 0; i < visible.size(); ++i) {
      const HullFace& face = faces_[visible[i]];
      for (int k = 0; k < 3; ++k) {
        const int a = face.v[k];
        const int b = face.v[(k + 1) % 3];
        const int g = edge_owner_.at(DirectedKey(b, a));
        if (g < static_cast<int>(is_visible.size()) && is_visible[g]) continue;
        if (Distance(faces_[g], eye) > eps_) {
          is_visible[g] = 1;
          visible.push_back(g);
        }
      }
    }
    for (int f : visible) {
      const HullFace& face = faces_[f];
      for (int k = 0; k < 3; ++k) {
        const int a = face.v[k];
        const int b = face.v[(k + 1) % 3];
        const int g = edge_owner_.at(DirectedKey(b, a));
        if (!is_visible[g]) horizon.emplace_back(a, b);
      }
    }

    std::vector<int> orphans;
    for (int f : visible) {
      HullFace& face = faces_[f];
      face.alive = false;
      for (int k = 0; k < 3; ++k) {
        edge_owner_.erase(DirectedKey(face.v[k], face.v[(k + 1) % 3]));
      }
      orphans.insert(orphans.end(), face.outside.begin(), face.outside.end());
      face.outside.clear();
      face.outside.shrink_to_fit();
    }

    std::vector<int> created;
    created.reserve(horizon.size());
    for (const auto& [a, b] : horizon) created.push_back(AddFace(a, b, eye));
    const int skip[1] = {eye};
    Distribute(orphans, created, skip);
    for (int f : created) {
      if (!faces_[f].outside.empty()) stack.push_back(f);
    }
  }

  TriangleMesh Export() const {
    TriangleMesh mesh;
    std::unordered_map<int, int> remap;
    for (const HullFace& face : faces_) {
      if (!face.alive) continue;
      std::array<int, 3> tri;
      for (int k = 0; k < 3; ++k) {
        auto [it, inserted] =
            remap.emplace(face.v[k], static_cast<int>(mesh.vertices.size()));
        if (inserted) mesh.vertices.push_back(points_[face.v[k]]);
        tri[k] = it->second;
      }
      mesh.faces.push_back(tri);
    }
    return mesh;
  }

  std::span<const Vec3> points_;
  double eps_;
  Vec3 interior_ = Vec3::Zero();
  std::vector<HullFace> faces_;
  std::unordered_map<uint64_t, int> edge_owner_;
};

}  // namespace

TriangleMesh ConvexHull(std::span<const Vec3> points) {
  if (points.size() < 4) {
    Fail(ErrorCode::kDegenerateInput, "convex hull needs at least 4 points");
  }
  // Extreme points along the coordinate axes seed the simplex.
  std::array<int, 6> extremes = {0, 0, 0, 0, 0, 0};
  for (size_t i = 0; i < points.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      if (points[i][k] < points[extremes[2 * k]][k]) extremes[2 * k] = i;
      if (points[i][k] > points[extremes[2 * k + 1]][k]) {
        extremes[2 * k + 1] = i;
      }
    }
  }
  int i0 = extremes[0], i1 = extremes[1];
  double span = -1;
  for (int x : extremes) {
    for (int y : extremes) {
      const double d = (points[x] - points[y]).norm();
      if (d > span) {
        span = d;
        i0 = x;
        i1 = y;
      }
    }
  }
  const double eps_degenerate = 1e-9 * span;
  if (!(span > 0)) {
    Fail(ErrorCode::kDegenerateInput, "all points coincide");
  }
  const Vec3 dir = (points[i1] - points[i0]).normalized();
  int i2 = -1;
  double best = -1;
  for (size_t i = 0; i < points.size(); ++i) {
    const Vec3 v = points[i] - points[i0];
    const double d = (v - v.dot(dir) * dir).norm();
    if (d > best) {
      best = d;
      i2 = static_cast<int>(i);
    }
  }
  if (best <= eps_degenerate) {
    Fail(ErrorCode::kDegenerateInput, "points are collinear");
  }
  const Vec3 normal =
      (points[i1] - points[i0]).cross(points[i2] - points[i0]).normalized();
  int i3 = -1;
  best = -1;
  for (size_t i = 0; i < points.size(); ++i) {
    const double d = std::abs(normal.dot(points[i] - points[i0]));
    if (d > best) {
      best = d;
      i3 = static_cast<int>(i);
    }
  }
  if (best <= eps_degenerate) {
    Fail(ErrorCode::kDegenerateInput, "points are coplanar");
  }
  HullBuilder builder(points, 1e-11 * span);
  return builder.Build({i0, i1, i2, i3});
}

}  // namespace aggmorph
