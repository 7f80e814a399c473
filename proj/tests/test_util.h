#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "aggmorph/mesh_geometry.h"
#include "aggmorph/error.h"

namespace aggmorph::testing {

inline std::vector<Vec3> RandomPoints(int n, uint64_t seed, const Vec3& half = Vec3::Ones()) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(u(rng) * half.x(), u(rng) * half.y(), u(rng) * half.z());
  return pts;
}

inline Mat3 EulerZyz(double alpha, double beta, double gamma) {
  auto rz = [](double t) {
    Mat3 m;
    m << std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0, 0, 0, 1;
    return m;
  };
  Mat3 ry;
  ry << std::cos(beta), 0, std::sin(beta), 0, 1, 0, -std::sin(beta), 0, std::cos(beta);
  return rz(alpha) * ry * rz(gamma);
}

// Smallest box volume over a ZYZ Euler grid. Rotating the box by 90 degrees
// about its own third axis gives the same box, so gamma spans [0, 90).
inline double GridSweepObbVolume(const std::vector<Vec3>& pts, double step_deg = 2.0) {
  const double d = step_deg * std::numbers::pi / 180.0;
  double best = std::numeric_limits<double>::infinity();
  const int na = static_cast<int>(std::lround(360.0 / step_deg));
  const int nb = static_cast<int>(std::lround(180.0 / step_deg));
  const int ng = static_cast<int>(std::lround(90.0 / step_deg));
  for (int ia = 0; ia < na; ++ia) {
    for (int ib = 0; ib < nb; ++ib) {
      for (int ig = 0; ig < ng; ++ig) {
        const Mat3 R = EulerZyz(ia * d, ib * d, ig * d);
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = -lo;
        for (const Vec3& p : pts) {
          const Vec3 q = R.transpose() * p;
          lo = lo.cwiseMin(q);
          hi = hi.cwiseMax(q);
        }
        best = std::min(best, (hi - lo).prod());
      }
    }
  }
  return best;
}

// Point-in-mesh by ray parity along +z, with triangles bucketed on an xy
// grid so that a million queries stay cheap.
class RayParityOracle {
 public:
  explicit RayParityOracle(const TriangleMesh& mesh, int grid = 64) : mesh_(mesh), grid_(grid) {
    lo_ = Vec2::Constant(std::numeric_limits<double>::infinity());
    hi_ = -lo_;
    for (const Vec3& v : mesh.vertices) {
      lo_ = lo_.cwiseMin(v.head<2>());
      hi_ = hi_.cwiseMax(v.head<2>());
    }
    cells_.resize(grid * grid);
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
      Vec2 a = Vec2::Constant(std::numeric_limits<double>::infinity()), b = -a;
      for (int k = 0; k < 3; ++k) {
        a = a.cwiseMin(mesh.vertices[mesh.faces[f][k]].head<2>());
        b = b.cwiseMax(mesh.vertices[mesh.faces[f][k]].head<2>());
      }
      const auto [c0, r0] = Cell(a);
      const auto [c1, r1] = Cell(b);
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) cells_[r * grid + c].push_back(static_cast<int>(f));
      }
    }
  }

  bool Contains(const Vec3& p) const {
    if ((p.head<2>().array() < lo_.array()).any() || (p.head<2>().array() > hi_.array()).any()) return false;
    const auto [c, r] = Cell(p.head<2>());
    int crossings = 0;
    for (int f : cells_[r * grid_ + c]) {
      const Vec3& a = mesh_.vertices[mesh_.faces[f][0]];
      const Vec3& b = mesh_.vertices[mesh_.faces[f][1]];
      const Vec3& d = mesh_.vertices[mesh_.faces[f][2]];
      const double det = (b.x() - a.x()) * (d.y() - a.y()) - (d.x() - a.x()) * (b.y() - a.y());
      if (det == 0) continue;
      const double u = ((p.x() - a.x()) * (d.y() - a.y()) - (d.x() - a.x()) * (p.y() - a.y())) / det;
      const double v = ((b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y())) / det;
      if (u < 0 || v < 0 || u + v > 1) continue;
      const double z = a.z() + u * (b.z() - a.z()) + v * (d.z() - a.z());
      if (z > p.z()) ++crossings;
    }
    return crossings % 2 == 1;
  }

 private:
  std::pair<int, int> Cell(const Vec2& q) const {
    const Vec2 t = (q - lo_).cwiseQuotient(hi_ - lo_) * grid_;
    return {std::clamp(static_cast<int>(t.x()), 0, grid_ - 1), std::clamp(static_cast<int>(t.y()), 0, grid_ - 1)};
  }

  const TriangleMesh& mesh_;
  int grid_;
  Vec2 lo_, hi_;
  std::vector<std::vector<int>> cells_;
};

// Largest signed distance of any point outside any hull face plane.
inline double MaxHalfSpaceViolation(const TriangleMesh& hull, const std::vector<Vec3>& pts) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& f : hull.faces) {
    const Vec3& a = hull.vertices[f[0]];
    const Vec3 n = (hull.vertices[f[1]] - a).cross(hull.vertices[f[2]] - a).normalized();
    for (const Vec3& p : pts) worst = std::max(worst, n.dot(p - a));
  }
  return worst;
}

inline double BrutePairwiseDiameter(const std::vector<Vec3>& pts) {
  double best = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    for (size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, (pts[i] - pts[j]).norm());
  }
  return best;
}

template <typename F>
ErrorCode CaughtCode(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(-1);
}

template <typename F>
std::string CaughtMessage(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

// Published ground-truth validation rows: measured and reconstructed volume
// (cm^3), surface area (cm^2) and box dimensions a, b, c (cm).
struct RockRow {
  double measured, reconstructed, area, a, b, c;
};

inline const std::vector<RockRow>& RockTable() {
  static const std::vector<RockRow> rows = {
      {1014.9, 1042.3, 685.32, 7.682, 13.142, 22.695}, {763.5, 786.33, 537.87, 9.308, 12.519, 17.412},
      {601.8, 605.04, 418.69, 9.477, 10.075, 14.572},  {791.4, 795.69, 558.41, 9.118, 10.133, 19.925},
      {727.6, 744.83, 503.13, 9.803, 10.649, 18.842},  {688.1, 691.96, 478.72, 7.497, 9.987, 15.925},
      {644, 662.47, 465.96, 11.614, 13.867, 14.041},   {1140.5, 1165.03, 704.29, 10.617, 12.213, 21.923},
      {592.7, 601.1, 435.01, 8.068, 11.517, 17.851},   {890.8, 920.92, 590.14, 10.374, 14.513, 17.37},
  };
  return rows;
}

// Fresh scratch directory under the build tree's temp area.
inline std::filesystem::path ScratchDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("aggmorph_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace aggmorph::testing
