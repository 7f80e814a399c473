#include "aggmorph/silhouette.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <unordered_map>

#include <Eigen/Geometry>

#include "aggmorph/error.h"

namespace aggmorph {
namespace {

struct CameraFrame {
  Vec3 x, y, z;
};

CameraFrame MakeFrame(const ViewCamera& camera) {
  CameraFrame f;
  f.z = camera.direction.normalized();
  Vec3 up = camera.up - camera.up.dot(f.z) * f.z;
  if (up.norm() < 1e-9) {
    Fail(ErrorCode::kInvalidConfig, "camera up vector is parallel to view");
  }
  f.y = -up.normalized();
  f.x = f.y.cross(f.z);
  return f;
}

double Cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

int Sign(double v) { return (v > 0) - (v < 0); }

bool OnSegment(const Vec2& p, const Vec2& q, const Vec2& r) {
  return std::min(p.x(), r.x()) <= q.x() && q.x() <= std::max(p.x(), r.x()) &&
         std::min(p.y(), r.y()) <= q.y() && q.y() <= std::max(p.y(), r.y());
}

bool SegmentsIntersect(const Vec2& p1, const Vec2& p2, const Vec2& q1,
                       const Vec2& q2) {
  const int o1 = Sign(Cross2(p1, p2, q1));
  const int o2 = Sign(Cross2(p1, p2, q2));
  const int o3 = Sign(Cross2(q1, q2, p1));
  const int o4 = Sign(Cross2(q1, q2, p2));
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && OnSegment(p1, q1, p2)) return true;
  if (o2 == 0 && OnSegment(p1, q2, p2)) return true;
  if (o3 == 0 && OnSegment(q1, p1, q2)) return true;
  if (o4 == 0 && OnSegment(q1, p2, q2)) return true;
  return false;
}

std::vector<Vec2> Hull2d(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  size_t k = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && Cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && Cross2(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

double ChordAngle(const Vec2& a, const Vec2& b) {
  double angle = std::atan2(b.y() - a.y(), b.x() - a.x());
  if (angle < 0) angle += std::numbers::pi;
  if (angle >= std::numbers::pi) angle -= std::numbers::pi;
  return angle;
}

}  // namespace

RasterMask::RasterMask(int w, int h)
    : width(w), height(h), pixels(static_cast<size_t>(w) * h, 0) {}

size_t RasterMask::CountForeground() const {
  return static_cast<size_t>(std::count(pixels.begin(), pixels.end(), 1));
}

ViewCamera TurntableView(const TriangleMesh& mesh, double azimuth_deg,
                         double elevation_deg, int resolution, double margin) {
  if (mesh.vertices.empty()) Fail(ErrorCode::kEmptyMesh, "mesh has no vertices");
  Vec3 lo = mesh.vertices.front();
  Vec3 hi = lo;
  for (const Vec3& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Vec3 center = 0.5 * (lo + hi);
  double radius = 0;
  for (const Vec3& v : mesh.vertices) radius = std::max(radius, (v - center).norm());

  const double az = azimuth_deg * std::numbers::pi / 180.0;
  const double el = elevation_deg * std::numbers::pi / 180.0;
  const Vec3 toward_camera(std::cos(el) * std::cos(az),
                           std::cos(el) * std::sin(az), std::sin(el));
  ViewCamera camera;
  camera.mode = ProjectionMode::kOrthographic;
  camera.direction = -toward_camera;
  camera.up = Vec3::UnitZ();
  if (std::abs(toward_camera.z()) > 1.0 - 1e-9) camera.up = Vec3::UnitX();
  camera.position = center;
  camera.width = resolution;
  camera.height = resolution;
  camera.pixel_pitch = 2.0 * radius / ((1.0 - margin) * resolution);
  return camera;
}

RasterMask RenderSilhouette(const TriangleMesh& mesh, const ViewCamera& camera) {
  if (mesh.vertices.empty() || mesh.faces.empty()) {
    Fail(ErrorCode::kEmptyMesh, "cannot render an empty mesh");
  }
  if (camera.width < 16 || camera.height < 16) {
    Fail(ErrorCode::kInvalidConfig, "image resolution must be at least 16x16");
  }
  const CameraFrame frame = MakeFrame(camera);
  std::vector<Vec2> uv(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3 d = mesh.vertices[i] - camera.position;
    if (camera.mode == ProjectionMode::kOrthographic) {
      uv[i] = Vec2(d.dot(frame.x) / camera.pixel_pitch + 0.5 * camera.width,
                   d.dot(frame.y) / camera.pixel_pitch + 0.5 * camera.height);
    } else {
      const double depth = d.dot(frame.z);
      if (depth <= 1e-12) {
        Fail(ErrorCode::kOutOfFrame, "vertex " + std::to_string(i) +
                                         " lies behind the pinhole camera");
      }
      uv[i] = Vec2(camera.focal * d.dot(frame.x) / depth + camera.principal.x(),
                   camera.focal * d.dot(frame.y) / depth + camera.principal.y());
    }
    if (!(uv[i].x() >= 0 && uv[i].x() <= camera.width && uv[i].y() >= 0 &&
          uv[i].y() <= camera.height)) {
      Fail(ErrorCode::kOutOfFrame,
           "vertex " + std::to_string(i) + " projects outside the image");
    }
  }

  RasterMask mask(camera.width, camera.height);
  if (camera.mode == ProjectionMode::kOrthographic) {
    mask.pixel_pitch = camera.pixel_pitch;
  }
  for (const auto& f : mesh.faces) {
    const Vec2& a = uv[f[0]];
    const Vec2& b = uv[f[1]];
    const Vec2& c = uv[f[2]];
    const double area2 = Cross2(a, b, c);
    if (area2 == 0) continue;
    const double sign = area2 > 0 ? 1.0 : -1.0;
    const int c0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}) - 0.5)));
    const int c1 = std::min(camera.width - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}) - 0.5)));
    const int r0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}) - 0.5)));
    const int r1 = std::min(camera.height - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}) - 0.5)));
    for (int row = r0; row <= r1; ++row) {
      for (int col = c0; col <= c1; ++col) {
        const Vec2 p(col + 0.5, row + 0.5);
        if (sign * Cross2(a, b, p) >= 0 && sign * Cross2(b, c, p) >= 0 &&
            sign * Cross2(c, a, p) >= 0) {
          mask.set(col, row, true);
        }
      }
    }
  }
  return mask;
}

SilhouettePolygon TraceBoundary(const RasterMask& mask) {
  const int w = mask.width;
  const int h = mask.height;
  if (w < 1 || h < 1 ||
      mask.pixels.size() != static_cast<size_t>(w) * static_cast<size_t>(h)) {
    Fail(ErrorCode::kInvalidInput, "mask dimensions do not match its buffer");
  }

  // Largest 4-connected component; ties go to the first in scan order.
  std::vector<int> label(mask.pixels.size(), -1);
  int best_label = -1;
  size_t best_size = 0;
  int next_label = 0;
  std::vector<int> queue;
  for (int start = 0; start < w * h; ++start) {
    if (!mask.pixels[start] || label[start] != -1) continue;
    const int id = next_label++;
    queue.assign(1, start);
    label[start] = id;
    for (size_t q = 0; q < queue.size(); ++q) {
      const int p = queue[q];
      const int col = p % w, row = p / w;
      const int nbr[4][2] = {{col - 1, row}, {col + 1, row}, {col, row - 1}, {col, row + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[0] >= w || n[1] < 0 || n[1] >= h) continue;
        const int np = n[1] * w + n[0];
        if (mask.pixels[np] && label[np] == -1) {
          label[np] = id;
          queue.push_back(np);
        }
      }
    }
    if (queue.size() > best_size) {
      best_size = queue.size();
      best_label = id;
    }
  }
  if (best_label < 0) Fail(ErrorCode::kNoForeground, "mask has no foreground");

  // Padded copy holding only the chosen component.
  const int pw = w + 2, ph = h + 2;
  std::vector<uint8_t> grid(static_cast<size_t>(pw) * ph, 0);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (label[row * w + col] == best_label) grid[(row + 1) * pw + col + 1] = 1;
    }
  }
  // Fill holes: background not 8-connected to the border becomes foreground.
  {
    std::vector<uint8_t> outside(grid.size(), 0);
    std::vector<int> stack = {0};
    outside[0] = 1;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int col = p % pw, row = p / pw;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int nc = col + dc, nr = row + dr;
          if (nc < 0 || nc >= pw || nr < 0 || nr >= ph) continue;
          const int np = nr * pw + nc;
          if (!grid[np] && !outside[np]) {
            outside[np] = 1;
            stack.push_back(np);
          }
        }
      }
    }
    for (size_t i = 0; i < grid.size(); ++i) {
      if (!outside[i]) grid[i] = 1;
    }
  }

  // Marching squares over cells whose corners are pixel centers. Crossing
  // points sit on grid edges; with binary input they are edge midpoints.
  // Edge ids: 2*(r*pw+c) for (c,r)-(c+1,r), 2*(r*pw+c)+1 for (c,r)-(c,r+1).
  auto horizontal = [&](int c, int r) { return 2L * (r * pw + c); };
  auto vertical = [&](int c, int r) { return 2L * (r * pw + c) + 1; };
  std::unordered_map<long, std::array<long, 2>> links;
  auto link = [&](long a, long b) {
    auto add = [&](long from, long to) {
      auto [it, inserted] = links.try_emplace(from, std::array<long, 2>{-1, -1});
      it->second[it->second[0] == -1 ? 0 : 1] = to;
    };
    add(a, b);
    add(b, a);
  };
  for (int r = 0; r + 1 < ph; ++r) {
    for (int c = 0; c + 1 < pw; ++c) {
      const bool tl = grid[r * pw + c];
      const bool tr = grid[r * pw + c + 1];
      const bool bl = grid[(r + 1) * pw + c];
      const bool br = grid[(r + 1) * pw + c + 1];
      const int code = tl | (tr << 1) | (br << 2) | (bl << 3);
      if (code == 0 || code == 15) continue;
      const long top = horizontal(c, r);
      const long bottom = horizontal(c, r + 1);
      const long left = vertical(c, r);
      const long right = vertical(c + 1, r);
      switch (code) {
        case 1: case 14: link(top, left); break;
        case 2: case 13: link(top, right); break;
        case 4: case 11: link(right, bottom); break;
        case 8: case 7: link(bottom, left); break;
        case 3: case 12: link(left, right); break;
        case 6: case 9: link(top, bottom); break;
        // Saddles: diagonal foreground pixels stay separated (4-connected
        // foreground), so each foreground corner is cut off on its own.
        case 5: link(top, left); link(right, bottom); break;
        case 10: link(top, right); link(bottom, left); break;
      }
    }
  }

  auto position = [&](long id) {
    const long cell = id / 2;
    const double c = static_cast<double>(cell % pw) - 1.0;
    const double r = static_cast<double>(cell / pw) - 1.0;
    return (id % 2 == 0) ? Vec2(c + 0.5, r) : Vec2(c, r + 0.5);
  };

  // Chain loops; keep the one enclosing the most area.
  std::vector<Vec2> best_loop;
  double best_area = -1;
  std::unordered_map<long, bool> used;
  std::vector<long> keys;
  keys.reserve(links.size());
  for (const auto& kv : links) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  for (long start : keys) {
    if (used[start]) continue;
    std::vector<Vec2> loop;
    long prev = -1, cur = start;
    while (!used[cur]) {
      used[cur] = true;
      loop.push_back(position(cur));
      const auto& nb = links.at(cur);
      const long next = (nb[0] != prev) ? nb[0] : nb[1];
      prev = cur;
      cur = next;
    }
    SilhouettePolygon candidate{loop};
    const double area = std::abs(SignedArea(candidate));
    if (area > best_area) {
      best_area = area;
      best_loop = std::move(loop);
    }
  }

  SilhouettePolygon poly{std::move(best_loop)};
  if (SignedArea(poly) < 0) std::reverse(poly.vertices.begin(), poly.vertices.end());
  if (mask.pixel_pitch) {
    for (Vec2& v : poly.vertices) v *= *mask.pixel_pitch;
  }
  return poly;
}

double SignedArea(const SilhouettePolygon& poly) {
  const auto& v = poly.vertices;
  double sum = 0;
  for (size_t i = 0, n = v.size(); i < n; ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % n];
    sum += a.x() * b.y() - a.y() * b.x();
  }
  return 0.5 * sum;
}

void CheckSimple(const SilhouettePolygon& poly) {
  const auto& v = poly.vertices;
  const size_t n = v.size();
  if (n < 3) Fail(ErrorCode::kDegeneratePolygon, "polygon needs 3 vertices");

  // Bucket edges into a uniform grid so only nearby pairs are tested.
  Vec2 lo = v[0], hi = v[0];
  double total = 0;
  for (size_t i = 0; i < n; ++i) {
    lo = lo.cwiseMin(v[i]);
    hi = hi.cwiseMax(v[i]);
    total += (v[(i + 1) % n] - v[i]).norm();
  }
  const double cell = std::max(2.0 * total / n, 1e-12 * (hi - lo).norm() + 1e-300);
  const int gx = std::clamp(static_cast<int>((hi.x() - lo.x()) / cell) + 1, 1, 4096);
  const int gy = std::clamp(static_cast<int>((hi.y() - lo.y()) / cell) + 1, 1, 4096);
  const double sx = gx / std::max(hi.x() - lo.x(), 1e-300);
  const double sy = gy / std::max(hi.y() - lo.y(), 1e-300);
  std::vector<std::vector<int>> buckets(static_cast<size_t>(gx) * gy);
  auto bucket_range = [&](double a, double b, double origin, double scale, int count) {
    const int i0 = std::clamp(static_cast<int>((std::min(a, b) - origin) * scale), 0, count - 1);
    const int i1 = std::clamp(static_cast<int>((std::max(a, b) - origin) * scale), 0, count - 1);
    return std::pair{i0, i1};
  };
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % n];
    const auto [x0, x1] = bucket_range(a.x(), b.x(), lo.x(), sx, gx);
    const auto [y0, y1] = bucket_range(a.y(), b.y(), lo.y(), sy, gy);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) buckets[y * gx + x].push_back(static_cast<int>(i));
    }
  }
  for (const auto& bucket : buckets) {
    for (size_t s = 0; s < bucket.size(); ++s) {
      for (size_t t = s + 1; t < bucket.size(); ++t) {
        size_t i = bucket[s], j = bucket[t];
        if (i > j) std::swap(i, j);
        const Vec2& p1 = v[i];
        const Vec2& p2 = v[(i + 1) % n];
        const Vec2& q1 = v[j];
        const Vec2& q2 = v[(j + 1) % n];
        const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
        if (adjacent) {
          // Neighbours share a vertex; only a fold back onto each other
          // (collinear overlap) is an intersection.
          const Vec2 shared = (j == i + 1) ? p2 : p1;
          const Vec2 a = (j == i + 1) ? p1 : p2;
          const Vec2 b = (j == i + 1) ? q2 : q1;
          if (Cross2(shared, a, b) == 0 && (a - shared).dot(b - shared) > 0) {
            Fail(ErrorCode::kSelfIntersecting,
                 "edges " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
          }
          continue;
        }
        if (SegmentsIntersect(p1, p2, q1, q2)) {
          Fail(ErrorCode::kSelfIntersecting,
               "edges " + std::to_string(i) + " and " + std::to_string(j) + " intersect");
        }
      }
    }
  }
}

PolygonMetrics ComputePolygonMetrics(const SilhouettePolygon& poly) {
  CheckSimple(poly);
  PolygonMetrics m;
  m.area = std::abs(SignedArea(poly));
  const auto& v = poly.vertices;
  for (size_t i = 0, n = v.size(); i < n; ++i) {
    m.perimeter += (v[(i + 1) % n] - v[i]).norm();
  }
  return m;
}

FeretResult MaxFeret(const SilhouettePolygon& poly) {
  if (poly.vertices.size() < 3) {
    Fail(ErrorCode::kDegeneratePolygon, "polygon needs 3 vertices");
  }
  const std::vector<Vec2> hull = Hull2d(poly.vertices);
  if (hull.size() < 3) {
    Fail(ErrorCode::kDegeneratePolygon, "polygon has zero area");
  }
  const size_t n = hull.size();
  std::vector<std::pair<size_t, size_t>> pairs;
  // Antipodal pairs by rotating calipers.
  size_t j = 1;
  for (size_t i = 0; i < n; ++i) {
    const size_t ni = (i + 1) % n;
    while (Cross2(hull[i], hull[ni], hull[(j + 1) % n]) >
           Cross2(hull[i], hull[ni], hull[j])) {
      j = (j + 1) % n;
    }
    pairs.emplace_back(i, j);
    pairs.emplace_back(ni, j);
    // Parallel supporting edges: the next vertex is antipodal too.
    if (Cross2(hull[i], hull[ni], hull[(j + 1) % n]) ==
        Cross2(hull[i], hull[ni], hull[j])) {
      pairs.emplace_back(i, (j + 1) % n);
      pairs.emplace_back(ni, (j + 1) % n);
    }
  }
  double best = 0;
  for (const auto& [a, b] : pairs) best = std::max(best, (hull[a] - hull[b]).norm());
  FeretResult result;
  result.length = best;
  result.angle = std::numbers::pi;
  for (const auto& [a, b] : pairs) {
    if ((hull[a] - hull[b]).norm() >= best * (1.0 - 1e-12)) {
      result.angle = std::min(result.angle, ChordAngle(hull[a], hull[b]));
    }
  }
  return result;
}

double MinFeretPerpendicular(const SilhouettePolygon& poly, double angle) {
  if (poly.vertices.size() < 3) {
    Fail(ErrorCode::kDegeneratePolygon, "polygon needs 3 vertices");
  }
  const Vec2 normal(-std::sin(angle), std::cos(angle));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Vec2& v : poly.vertices) {
    const double t = v.dot(normal);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (!(hi - lo > 0)) Fail(ErrorCode::kDegeneratePolygon, "polygon has zero width");
  return hi - lo;
}

double Fer2d(double l_max, double l_min) {
  if (!(l_max > 0) || !(l_min > 0)) {
    Fail(ErrorCode::kNonPositiveInput, "Feret diameters must be positive");
  }
  if (l_max < l_min) {
    Fail(ErrorCode::kOrderViolation, "L_max is smaller than L_min");
  }
  return l_max / l_min;
}

double Circularity2d(double area, double perimeter) {
  if (!(area > 0) || !(perimeter > 0)) {
    Fail(ErrorCode::kNonPositiveInput, "area and perimeter must be positive");
  }
  return 4.0 * std::numbers::pi * area / (perimeter * perimeter);
}

ViewMetrics AnalyzeSilhouette(const SilhouettePolygon& poly) {
  ViewMetrics m;
  const PolygonMetrics pm = ComputePolygonMetrics(poly);
  m.area = pm.area;
  m.perimeter = pm.perimeter;
  const FeretResult feret = MaxFeret(poly);
  m.l_max = feret.length;
  m.l_max_angle = feret.angle;
  m.l_min = MinFeretPerpendicular(poly, feret.angle);
  m.fer_2d = Fer2d(m.l_max, m.l_min);
  m.circularity = Circularity2d(m.area, m.perimeter);
  return m;
}

std::vector<ViewMetrics> AnalyzeTurntableViews(const TriangleMesh& mesh, int n_views,
                                               double elevation_deg, int resolution) {
  if (n_views < 1) Fail(ErrorCode::kInvalidConfig, "need at least one view");
  std::vector<ViewMetrics> out;
  for (int k = 0; k < n_views; ++k) {
    const ViewCamera cam = TurntableView(mesh, 360.0 * k / n_views, elevation_deg, resolution);
    out.push_back(AnalyzeSilhouette(TraceBoundary(RenderSilhouette(mesh, cam))));
  }
  return out;
}

}  // namespace aggmorph
