#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnayield/core/geometry.hpp"
#include "dnayield/features/cells.hpp"
#include "dnayield/features/summary.hpp"
#include "dnayield/mask/binary_mask.hpp"
#include "dnayield/mask/labeling.hpp"

namespace dnayield::features {

inline constexpr std::size_t kRegionShapeCount = 8;
inline constexpr std::size_t kCellShapeCount = 22;

inline const std::array<const char*, kRegionShapeCount>& region_shape_names() {
  static const std::array<const char*, kRegionShapeCount> n = {
      "area", "perimeter", "circularity", "solidity", "eccentricity", "major_axis", "minor_axis",
      "equivalent_diameter"};
  return n;
}

inline const std::array<const char*, kCellShapeCount>& cell_shape_names() {
  static const std::array<const char*, kCellShapeCount> n = {
      "area",          "perimeter",   "circularity",  "solidity",   "eccentricity",  "major_axis",
      "minor_axis",    "equivalent_diameter", "extent", "aspect_ratio", "convex_perimeter",
      "convexity",     "compactness", "orientation",  "bbox_width", "bbox_height",   "radial_mean",
      "radial_std",    "radial_min",  "radial_max",   "roughness",  "elongation"};
  return n;
}

namespace impl {

// Clockwise in image coordinates (y down), starting west.
inline constexpr std::array<int, 8> kDx = {-1, -1, 0, 1, 1, 1, 0, -1};
inline constexpr std::array<int, 8> kDy = {0, -1, -1, -1, 0, 1, 1, 1};

inline int direction_of(int dx, int dy) {
  for (int d = 0; d < 8; ++d)
    if (kDx[d] == dx && kDy[d] == dy) return d;
  return -1;
}

inline double safe_div(double a, double b) { return b != 0.0 ? a / b : 0.0; }

}  // namespace impl

/// Length of the outer 8-connected boundary chain of the region containing
/// `start` (its top-left pixel), via Moore-neighbour tracing. Axis steps count
/// 1, diagonal steps sqrt(2). A lone pixel has length 0.
template <typename Inside>
double boundary_chain_length(int sx, int sy, Inside inside) {
  int cx = sx, cy = sy;
  int back = 0;  // came from the west: nothing foreground precedes start in raster order
  int second_x = 0, second_y = 0;
  bool first_move = true;
  double length = 0.0;
  for (std::size_t guard = 0;; ++guard) {
    int nd = -1;
    for (int k = 1; k <= 8; ++k) {
      const int d = (back + k) % 8;
      if (inside(cx + impl::kDx[d], cy + impl::kDy[d])) {
        nd = d;
        break;
      }
    }
    if (nd < 0) return 0.0;
    const int nx = cx + impl::kDx[nd], ny = cy + impl::kDy[nd];
    if (first_move) {
      second_x = nx;
      second_y = ny;
      first_move = false;
    } else if (cx == sx && cy == sy && nx == second_x && ny == second_y) {
      return length;
    }
    length += (nd % 2 == 1) ? std::numbers::sqrt2 : 1.0;
    const int pd = (nd + 7) % 8;
    const int bx = cx + impl::kDx[pd], by = cy + impl::kDy[pd];
    back = impl::direction_of(bx - nx, by - ny);
    cx = nx;
    cy = ny;
    if (guard > 64'000'000) throw InvalidInput("boundary tracing did not terminate");
  }
}

/// The 8 region features for one labelled raster region.
inline std::array<double, kRegionShapeCount> region_shape(const mask::RegionLabeling& lab, int width,
                                                          int height, int label) {
  std::vector<geom::IPoint> corners;
  double n = 0, sx = 0, sy = 0;
  int top_x = -1, top_y = -1;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      if (lab.label(x, y) != label) continue;
      if (top_x < 0) {
        top_x = x;
        top_y = y;
      }
      n += 1;
      sx += x;
      sy += y;
      const bool l = x == 0 || lab.label(x - 1, y) != label;
      const bool r = x == width - 1 || lab.label(x + 1, y) != label;
      const bool u = y == 0 || lab.label(x, y - 1) != label;
      const bool d = y == height - 1 || lab.label(x, y + 1) != label;
      if (l || r || u || d) {
        corners.push_back({x, y});
        corners.push_back({x + 1, y});
        corners.push_back({x, y + 1});
        corners.push_back({x + 1, y + 1});
      }
    }
  std::array<double, kRegionShapeCount> f{};
  if (n == 0) return f;
  const double mx = sx / n, my = sy / n;
  double m20 = 0, m02 = 0, m11 = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (lab.label(x, y) == label) {
        m20 += (x - mx) * (x - mx);
        m02 += (y - my) * (y - my);
        m11 += (x - mx) * (y - my);
      }
  const auto e = geom::ellipse_from_moments(m20 / n, m02 / n, m11 / n);
  const double perim = boundary_chain_length(top_x, top_y, [&](int x, int y) {
    return x >= 0 && y >= 0 && x < width && y < height && lab.label(x, y) == label;
  });
  std::vector<geom::Point> hull;
  for (const auto& p : geom::convex_hull(corners))
    hull.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
  const double hull_area = std::abs(geom::signed_area(hull));
  f[0] = n;
  f[1] = perim;
  f[2] = impl::safe_div(4.0 * std::numbers::pi * n, perim * perim);
  f[3] = impl::safe_div(n, hull_area);
  f[4] = e.eccentricity;
  f[5] = e.major;
  f[6] = e.minor;
  f[7] = std::sqrt(4.0 * n / std::numbers::pi);
  return f;
}

/// Per-region features for every 8-connected region of `m`, in label order.
inline std::vector<std::array<double, kRegionShapeCount>> region_shapes(const mask::BinaryMask& m) {
  const auto lab = mask::label_components(m);
  std::vector<std::array<double, kRegionShapeCount>> out;
  if (lab.region_count() == 0) return out;
  // One pass to gather bounding boxes keeps the per-region work local.
  struct Box { int x0, y0, x1, y1; };
  std::vector<Box> boxes(static_cast<std::size_t>(lab.region_count()) + 1,
                         {m.width(), m.height(), -1, -1});
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (int l = lab.label(x, y); l > 0) {
        auto& b = boxes[static_cast<std::size_t>(l)];
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
      }
  for (int l = 1; l <= lab.region_count(); ++l) {
    const auto& b = boxes[static_cast<std::size_t>(l)];
    // Crop with a one-pixel frame so border tests inside region_shape see background.
    const int w = b.x1 - b.x0 + 3, h = b.y1 - b.y0 + 3;
    mask::RegionLabeling crop;
    crop.width = w;
    crop.height = h;
    crop.labels.assign(static_cast<std::size_t>(w) * h, 0);
    for (int y = b.y0; y <= b.y1; ++y)
      for (int x = b.x0; x <= b.x1; ++x)
        if (lab.label(x, y) == l) crop.labels[static_cast<std::size_t>(y - b.y0 + 1) * w + (x - b.x0 + 1)] = 1;
    crop.region_sizes = {0, lab.region_sizes[static_cast<std::size_t>(l)]};
    out.push_back(region_shape(crop, w, h, 1));
  }
  return out;
}

/// 8 features x S12 over regions (1-99 clipping); all zeros for an empty mask.
inline std::vector<double> tumor_shape_features(const mask::BinaryMask& tumor) {
  std::vector<double> out(kRegionShapeCount * stat_count(StatSet::S12), 0.0);
  const auto regions = region_shapes(tumor);
  if (regions.empty()) return out;
  std::vector<double> col(regions.size());
  for (std::size_t f = 0; f < kRegionShapeCount; ++f) {
    for (std::size_t r = 0; r < regions.size(); ++r) col[r] = regions[r][f];
    const auto s = clip_and_summarize(col, 1.0, 99.0, StatSet::S12);
    std::copy(s.begin(), s.end(), out.begin() + static_cast<std::ptrdiff_t>(f * s.size()));
  }
  return out;
}

/// The 22 polygon features of one nucleus, or nullopt when the polygon has no
/// area or crosses itself.
inline std::optional<std::array<double, kCellShapeCount>> cell_shape(std::span<const geom::Point> poly) {
  if (poly.size() < 3 || !geom::is_simple_polygon(poly)) return std::nullopt;
  const auto mom = geom::polygon_moments(poly);
  if (!(mom.area > 0.0)) return std::nullopt;
  const auto e = geom::ellipse_from_moments(mom.mu20, mom.mu02, mom.mu11);
  const double a = mom.area, p = geom::polygon_perimeter(poly);
  const auto hull = geom::convex_hull(std::vector<geom::Point>(poly.begin(), poly.end()));
  const double hull_area = std::abs(geom::signed_area(hull));
  const double hull_perim = geom::polygon_perimeter(hull);
  double x0 = poly[0].x, x1 = x0, y0 = poly[0].y, y1 = y0;
  for (const auto& v : poly) {
    x0 = std::min(x0, v.x);
    x1 = std::max(x1, v.x);
    y0 = std::min(y0, v.y);
    y1 = std::max(y1, v.y);
  }
  double rs = 0, rss = 0, rmin = INFINITY, rmax = 0;
  for (const auto& v : poly) {
    const double r = std::hypot(v.x - mom.centroid.x, v.y - mom.centroid.y);
    rs += r;
    rss += r * r;
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  const double k = static_cast<double>(poly.size());
  const double rmean = rs / k;
  const double rstd = std::sqrt(std::max(0.0, rss / k - rmean * rmean));
  return std::array<double, kCellShapeCount>{
      a,
      p,
      4.0 * std::numbers::pi * a / (p * p),
      impl::safe_div(a, hull_area),
      e.eccentricity,
      e.major,
      e.minor,
      std::sqrt(4.0 * a / std::numbers::pi),
      impl::safe_div(a, (x1 - x0) * (y1 - y0)),
      impl::safe_div(e.major, e.minor),
      hull_perim,
      hull_perim / p,
      p * p / a,
      e.orientation,
      x1 - x0,
      y1 - y0,
      rmean,
      rstd,
      rmin,
      rmax,
      impl::safe_div(rstd, rmean),
      impl::safe_div(e.major - e.minor, e.major)};
}

struct CellShapeResult {
  std::vector<double> values;  // 22 x 30
  std::size_t degenerate = 0;
};

inline CellShapeResult cell_shape_features(const std::vector<ClassifiedCell>& cells) {
  CellShapeResult res;
  res.values.assign(kCellShapeCount * stat_count(StatSet::S30), 0.0);
  std::vector<std::array<double, kCellShapeCount>> rows;
  rows.reserve(cells.size());
  for (const auto& c : cells) {
    if (auto f = cell_shape(c.detection.polygon))
      rows.push_back(*f);
    else
      ++res.degenerate;
  }
  if (rows.empty()) return res;
  std::vector<double> col(rows.size());
  for (std::size_t f = 0; f < kCellShapeCount; ++f) {
    for (std::size_t r = 0; r < rows.size(); ++r) col[r] = rows[r][f];
    const auto s = clip_and_summarize(col, 1.0, 99.0, StatSet::S30);
    std::copy(s.begin(), s.end(), res.values.begin() + static_cast<std::ptrdiff_t>(f * s.size()));
  }
  return res;
}

}  // namespace dnayield::features
