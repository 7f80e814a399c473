#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "aggmorph/error.h"
#include "aggmorph/mesh_geometry.h"

namespace aggmorph {
namespace {

double Cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain; CCW. Nearly collinear and nearly coincident points
// are dropped so that every surviving edge has a well-defined direction.
std::vector<Vec2> ConvexHull2d(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  if (pts.size() < 3) return pts;
  Vec2 lo = pts.front(), hi = pts.front();
  for (const Vec2& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double eps = 1e-12 * (hi - lo).squaredNorm();
  std::vector<Vec2> hull(2 * pts.size());
  size_t k = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && Cross2(hull[k - 2], hull[k - 1], pts[i]) <= eps) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && Cross2(hull[k - 2], hull[k - 1], pts[i - 1]) <= eps) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

struct Rect2 {
  double area = std::numeric_limits<double>::infinity();
  Vec2 axis = Vec2::UnitX();  // first side direction; second is its normal
};

// Minimum-area enclosing rectangle of a CCW convex polygon by rotating
// calipers: one side is flush with some hull edge.
Rect2 MinAreaRect(const std::vector<Vec2>& hull) {
  Rect2 best;
  const size_t n = hull.size();
  if (n < 3) return best;
  auto edge_dir = [&](size_t i) {
    return Vec2((hull[(i + 1) % n] - hull[i]).normalized());
  };
  size_t right = 0, top = 0, left = 0;
  {
    const Vec2 e = edge_dir(0);
    const Vec2 nrm(-e.y(), e.x());
    for (size_t j = 0; j < n; ++j) {
      if (hull[j].dot(e) > hull[right].dot(e)) right = j;
      if (hull[j].dot(nrm) > hull[top].dot(nrm)) top = j;
      if (hull[j].dot(e) < hull[left].dot(e)) left = j;
    }
  }
  for (size_t i = 0; i < n; ++i) {
    const Vec2 e = edge_dir(i);
    const Vec2 nrm(-e.y(), e.x());
    for (size_t s = 0; s < n && hull[(right + 1) % n].dot(e) >= hull[right].dot(e); ++s) {
      right = (right + 1) % n;
    }
    for (size_t s = 0; s < n && hull[(top + 1) % n].dot(nrm) >= hull[top].dot(nrm); ++s) {
      top = (top + 1) % n;
    }
    for (size_t s = 0; s < n && hull[(left + 1) % n].dot(e) <= hull[left].dot(e); ++s) {
      left = (left + 1) % n;
    }
    const double width = hull[right].dot(e) - hull[left].dot(e);
    const double height = hull[top].dot(nrm) - hull[i].dot(nrm);
    const double area = width * height;
    if (area < best.area) {
      best.area = area;
      best.axis = e;
    }
  }
  return best;
}

void PerpendicularBasis(const Vec3& n, Vec3& u, Vec3& w) {
  const Vec3 helper =
      std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  u = n.cross(helper).normalized();
  w = n.cross(u);
}

struct Candidate {
  double volume = std::numeric_limits<double>::infinity();
  Mat3 axes = Mat3::Identity();  // columns
};

// Best box having `n` as one axis; the other two come from the exact 2D
// rectangle of the projection.
Candidate BoxAroundAxis(const std::vector<Vec3>& pts, const Vec3& axis) {
  Candidate out;
  const Vec3 n = axis.normalized();
  Vec3 u, w;
  PerpendicularBasis(n, u, w);
  std::vector<Vec2> proj(pts.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (size_t i = 0; i < pts.size(); ++i) {
    proj[i] = Vec2(pts[i].dot(u), pts[i].dot(w));
    const double h = pts[i].dot(n);
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  }
  const Rect2 rect = MinAreaRect(ConvexHull2d(std::move(proj)));
  if (!std::isfinite(rect.area)) return out;
  out.volume = rect.area * (hi - lo);
  const Vec3 e1 = rect.axis.x() * u + rect.axis.y() * w;
  out.axes.col(0) = n;
  out.axes.col(1) = e1.normalized();
  out.axes.col(2) = n.cross(out.axes.col(1)).normalized();
  return out;
}

OrientedBox Finalize(const std::vector<Vec3>& pts, const Mat3& axes) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Vec3& p : pts) {
    const Vec3 q = axes.transpose() * p;
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  const Vec3 ext = hi - lo;
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return ext[a] < ext[b]; });
  OrientedBox box;
  box.center = axes * (0.5 * (lo + hi));
  for (int k = 0; k < 3; ++k) {
    box.axes[k] = axes.col(order[k]);
    box.extents[k] = ext[order[k]];
  }
  if (box.axes[0].cross(box.axes[1]).dot(box.axes[2]) < 0) {
    box.axes[2] = -box.axes[2];
  }
  return box;
}

}  // namespace

OrientedBox MinVolumeObb(std::span<const Vec3> points,
                         const ObbOptions& options) {
  const TriangleMesh hull = ConvexHull(points);
  const std::vector<Vec3>& pts = hull.vertices;

  Candidate best;
  for (const auto& f : hull.faces) {
    const Vec3 n = (pts[f[1]] - pts[f[0]]).cross(pts[f[2]] - pts[f[0]]);
    if (n.squaredNorm() == 0) continue;
    const Candidate c = BoxAroundAxis(pts, n);
    if (c.volume < best.volume) best = c;
  }

  const double deg = std::numbers::pi / 180.0;
  const int steps = static_cast<int>(
      std::lround(options.refine_half_range_deg / options.refine_step_deg));
  for (int round = 0; round < options.max_refine_rounds; ++round) {
    Candidate round_best = best;
    for (int k = 0; k < 3; ++k) {
      const Vec3 axis = best.axes.col(k);
      const Vec3 p1 = best.axes.col((k + 1) % 3);
      const Vec3 p2 = best.axes.col((k + 2) % 3);
      for (int i = -steps; i <= steps; ++i) {
        for (int j = -steps; j <= steps; ++j) {
          if (i == 0 && j == 0) continue;
          const Mat3 tilt =
              (Eigen::AngleAxisd(i * options.refine_step_deg * deg, p1) *
               Eigen::AngleAxisd(j * options.refine_step_deg * deg, p2))
                  .toRotationMatrix();
          const Candidate c = BoxAroundAxis(pts, tilt * axis);
          if (c.volume < round_best.volume) round_best = c;
        }
      }
    }
    if (!(round_best.volume < best.volume * (1.0 - 1e-12))) break;
    best = round_best;
  }
  return Finalize(pts, best.axes);
}

}  // namespace aggmorph
