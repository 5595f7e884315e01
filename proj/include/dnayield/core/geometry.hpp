#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace dnayield::geom {

template <typename T>
struct Point2 {
  T x{};
  T y{};
  friend bool operator==(const Point2&, const Point2&) = default;
  friend auto operator<=>(const Point2&, const Point2&) = default;
};

using Point = Point2<double>;
using IPoint = Point2<std::int64_t>;

template <typename T>
T cross(const Point2<T>& o, const Point2<T>& a, const Point2<T>& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Andrew's monotone chain. Counter-clockwise (in a y-up frame), no repeated
/// and no collinear vertices. Degenerate inputs return 1 or 2 points.
template <typename T>
std::vector<Point2<T>> convex_hull(std::vector<Point2<T>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) return pts;
  std::vector<Point2<T>> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// Closed-set membership for a hull produced by convex_hull().
template <typename T>
bool in_convex_hull(std::span<const Point2<T>> hull, const Point2<T>& p) {
  if (hull.empty()) return false;
  if (hull.size() == 1) return hull[0] == p;
  if (hull.size() == 2) {
    if (cross(hull[0], hull[1], p) != 0) return false;
    return std::min(hull[0].x, hull[1].x) <= p.x && p.x <= std::max(hull[0].x, hull[1].x) &&
           std::min(hull[0].y, hull[1].y) <= p.y && p.y <= std::max(hull[0].y, hull[1].y);
  }
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    if (cross(a, b, p) < 0) return false;
  }
  return true;
}

/// Signed shoelace area (positive for counter-clockwise in a y-up frame).
inline double signed_area(std::span<const Point> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

inline double polygon_perimeter(std::span<const Point> poly) {
  if (poly.size() < 2) return 0.0;
  double p = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    p += std::hypot(b.x - a.x, b.y - a.y);
  }
  return p;
}

/// Area centroid and second central moments (per unit area) of a simple polygon.
struct PolygonMoments {
  double area = 0.0;
  Point centroid;
  double mu20 = 0.0;
  double mu02 = 0.0;
  double mu11 = 0.0;
};

inline PolygonMoments polygon_moments(std::span<const Point> poly) {
  PolygonMoments m;
  const double a = signed_area(poly);
  if (a == 0.0 || poly.size() < 3) return m;
  // Shift to the first vertex for conditioning.
  const Point o = poly[0];
  double cx = 0.0, cy = 0.0, ixx = 0.0, iyy = 0.0, ixy = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const double x0 = poly[i].x - o.x, y0 = poly[i].y - o.y;
    const double x1 = poly[(i + 1) % poly.size()].x - o.x, y1 = poly[(i + 1) % poly.size()].y - o.y;
    const double c = x0 * y1 - x1 * y0;
    cx += (x0 + x1) * c;
    cy += (y0 + y1) * c;
    ixx += (x0 * x0 + x0 * x1 + x1 * x1) * c;
    iyy += (y0 * y0 + y0 * y1 + y1 * y1) * c;
    ixy += (x0 * y1 + 2 * x0 * y0 + 2 * x1 * y1 + x1 * y0) * c;
  }
  cx /= 6.0 * a;
  cy /= 6.0 * a;
  ixx /= 12.0 * a;  // E[x^2]
  iyy /= 12.0 * a;  // E[y^2]
  ixy /= 24.0 * a;  // E[xy]
  m.area = std::abs(a);
  m.centroid = {cx + o.x, cy + o.y};
  m.mu20 = ixx - cx * cx;
  m.mu02 = iyy - cy * cy;
  m.mu11 = ixy - cx * cy;
  return m;
}

/// Ellipse fitted to second moments: full axis lengths (4 sqrt(eigenvalue)),
/// eccentricity and major-axis orientation in radians.
struct EllipseFit {
  double major = 0.0;
  double minor = 0.0;
  double eccentricity = 0.0;
  double orientation = 0.0;
};

inline EllipseFit ellipse_from_moments(double mu20, double mu02, double mu11) {
  EllipseFit e;
  const double common = std::sqrt(((mu20 - mu02) / 2.0) * ((mu20 - mu02) / 2.0) + mu11 * mu11);
  const double l1 = (mu20 + mu02) / 2.0 + common;
  const double l2 = std::max(0.0, (mu20 + mu02) / 2.0 - common);
  e.major = 4.0 * std::sqrt(std::max(0.0, l1));
  e.minor = 4.0 * std::sqrt(l2);
  e.eccentricity = l1 > 0.0 ? std::sqrt(std::max(0.0, 1.0 - l2 / l1)) : 0.0;
  e.orientation = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02);
  return e;
}

/// Segment intersection test used to validate simple polygons.
inline bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  auto orient = [](const Point& a, const Point& b, const Point& c) {
    const double v = cross(a, b, c);
    return (v > 0) - (v < 0);
  };
  auto on_seg = [](const Point& a, const Point& b, const Point& c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_seg(p1, p2, q1)) return true;
  if (o2 == 0 && on_seg(p1, p2, q2)) return true;
  if (o3 == 0 && on_seg(q1, q2, p1)) return true;
  if (o4 == 0 && on_seg(q1, q2, p2)) return true;
  return false;
}

inline bool is_simple_polygon(std::span<const Point> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent edges share a vertex
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

}  // namespace dnayield::geom
