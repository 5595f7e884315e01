#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "dnayield/core/geometry.hpp"
#include "dnayield/mask/binary_mask.hpp"
#include "dnayield/mask/labeling.hpp"

namespace dnayield::mask {

/// Drops 8-connected components smaller than `fraction` of the largest one.
/// A component exactly at the threshold survives.
inline BinaryMask remove_small_regions(const BinaryMask& m, double fraction) {
  dnayield::detail::require(fraction > 0.0 && fraction < 1.0,
                            "remove_small_regions: fraction must be in (0, 1)");
  const auto lab = label_components(m, Connectivity::eight);
  BinaryMask out = m.blank_like();
  if (lab.region_count() == 0) return out;
  const double threshold = fraction * static_cast<double>(lab.largest_size());
  std::vector<bool> keep(lab.region_sizes.size(), false);
  for (std::size_t r = 1; r < lab.region_sizes.size(); ++r)
    keep[r] = !(static_cast<double>(lab.region_sizes[r]) < threshold);
  for (std::size_t i = 0; i < lab.labels.size(); ++i)
    if (lab.labels[i] != 0 && keep[static_cast<std::size_t>(lab.labels[i])]) out.data()[i] = 1;
  return out;
}

/// Fills every background region that is not 4-connected to the image border.
inline BinaryMask fill_holes(const BinaryMask& m) {
  const int w = m.width(), h = m.height();
  BinaryMask out = m;
  std::vector<std::uint8_t> reached(m.size(), 0);
  std::vector<std::pair<int, int>> stack;
  auto seed = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    if (!m.data()[i] && !reached[i]) {
      reached[i] = 1;
      stack.emplace_back(x, y);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  static constexpr int dx[4] = {1, -1, 0, 0};
  static constexpr int dy[4] = {0, 0, 1, -1};
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    for (int d = 0; d < 4; ++d) {
      const int nx = x + dx[d], ny = y + dy[d];
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      seed(nx, ny);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!reached[i]) out.data()[i] = 1;
  return out;
}

namespace impl {

// Sliding max (dilate) or min (erode) over a window of half-width r along one axis.
// Out-of-image samples never contribute to a dilation and never erode.
inline void sweep_axis(const BinaryMask& src, BinaryMask& dst, int r, bool horizontal, bool dilate) {
  const int w = src.width(), h = src.height();
  const int outer = horizontal ? h : w;
  const int len = horizontal ? w : h;
  std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
  for (int o = 0; o < outer; ++o) {
    prefix[0] = 0;
    for (int i = 0; i < len; ++i) {
      const bool v = horizontal ? src.at(i, o) : src.at(o, i);
      prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + (v ? 1 : 0);
    }
    for (int i = 0; i < len; ++i) {
      const int lo = std::max(0, i - r), hi = std::min(len - 1, i + r);
      const int ones = prefix[static_cast<std::size_t>(hi) + 1] - prefix[static_cast<std::size_t>(lo)];
      const bool v = dilate ? ones > 0 : ones == hi - lo + 1;
      if (horizontal)
        dst.set(i, o, v);
      else
        dst.set(o, i, v);
    }
  }
}

inline BinaryMask square_filter(const BinaryMask& m, int radius, bool dilate) {
  if (radius == 0 || m.size() == 0) return m;
  BinaryMask tmp = m.blank_like();
  BinaryMask out = m.blank_like();
  sweep_axis(m, tmp, radius, true, dilate);
  sweep_axis(tmp, out, radius, false, dilate);
  return out;
}

}  // namespace impl

/// Repeated dilation by a square kernel. `iterations` passes of a k x k square
/// equal one pass of a square of half-width iterations * (k-1)/2.
inline BinaryMask dilate(const BinaryMask& m, int kernel_side, int iterations) {
  dnayield::detail::require(kernel_side >= 1 && kernel_side % 2 == 1,
                            "dilate: kernel side must be odd and >= 1");
  dnayield::detail::require(iterations >= 0, "dilate: iterations must be >= 0");
  return impl::square_filter(m, iterations * (kernel_side - 1) / 2, true);
}

inline BinaryMask erode(const BinaryMask& m, int kernel_side, int iterations) {
  dnayield::detail::require(kernel_side >= 1 && kernel_side % 2 == 1,
                            "erode: kernel side must be odd and >= 1");
  dnayield::detail::require(iterations >= 0, "erode: iterations must be >= 0");
  return impl::square_filter(m, iterations * (kernel_side - 1) / 2, false);
}

/// Source pixel index -> destination pixel index for a magnification change.
inline int scale_index(int i, double from_mag, double to_mag) {
  return static_cast<int>(std::floor(static_cast<double>(i) * to_mag / from_mag + 1e-9));
}

/// OR-pooling reduction to a lower magnification.
inline BinaryMask downsample(const BinaryMask& m, double target_magnification) {
  dnayield::detail::require(target_magnification > 0.0, "downsample: target must be positive");
  dnayield::detail::require(target_magnification <= m.magnification(),
                            "downsample: target magnification exceeds source (upsampling)");
  if (target_magnification == m.magnification()) return m;
  const double ratio = target_magnification / m.magnification();
  const int ow = static_cast<int>(std::ceil(m.width() * ratio - 1e-9));
  const int oh = static_cast<int>(std::ceil(m.height() * ratio - 1e-9));
  BinaryMask out(ow, oh, target_magnification, m.pixel_pitch() * m.magnification() / target_magnification);
  for (int y = 0; y < m.height(); ++y) {
    const int oy = scale_index(y, m.magnification(), target_magnification);
    for (int x = 0; x < m.width(); ++x)
      if (m.at(x, y)) out.set(scale_index(x, m.magnification(), target_magnification), oy);
  }
  return out;
}

/// Nearest-neighbour resampling onto another raster grid (used to apply a
/// low-resolution scope mask to a higher-resolution one).
inline BinaryMask resample_nearest(const BinaryMask& m, int width, int height, double magnification) {
  BinaryMask out(width, height, magnification, m.pixel_pitch() * m.magnification() / magnification);
  for (int y = 0; y < height; ++y) {
    const int sy = scale_index(y, magnification, m.magnification());
    for (int x = 0; x < width; ++x) {
      const int sx = scale_index(x, magnification, m.magnification());
      if (m.get(sx, sy)) out.set(x, y);
    }
  }
  return out;
}

/// Rasterized convex hull: a pixel is set iff its center lies in the closed
/// convex hull of the foreground pixel centers.
inline BinaryMask convex_hull_mask(const BinaryMask& m) {
  std::vector<geom::IPoint> pts;
  for (int y = 0; y < m.height(); ++y) {
    int first = -1, last = -1;
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      if (first < 0) first = x;
      last = x;
    }
    if (first >= 0) {
      pts.push_back({first, y});
      if (last != first) pts.push_back({last, y});
    }
  }
  dnayield::detail::require(!pts.empty(), "convex_hull_mask: empty mask");
  const auto hull = geom::convex_hull(std::move(pts));
  std::int64_t x0 = hull[0].x, x1 = hull[0].x, y0 = hull[0].y, y1 = hull[0].y;
  for (const auto& p : hull) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  BinaryMask out = m.blank_like();
  const std::span<const geom::IPoint> hs(hull);
  for (auto y = y0; y <= y1; ++y)
    for (auto x = x0; x <= x1; ++x)
      if (geom::in_convex_hull(hs, geom::IPoint{x, y})) out.set(static_cast<int>(x), static_cast<int>(y));
  return out;
}

struct MacroParams {
  double small_region_fraction = 0.1;
  double working_magnification = 0.625;
  int kernel_side = 3;
  int iterations = 25;
  int max_contours = 3;
};

/// Outcome of macrodissection-area estimation. `area` is absent when no tumor
/// was detected; callers then fall back to whole-slide recommendations.
struct MacroEstimate {
  std::optional<BinaryMask> area;
  int contours_after_dilation = 0;
  bool hull_applied = false;

  bool tumor_detected() const { return area.has_value(); }
};

inline MacroEstimate estimate_macrodissection_area(const BinaryMask& tumor_mask,
                                                   const MacroParams& p = {}) {
  MacroEstimate est;
  if (tumor_mask.empty()) return est;
  const BinaryMask filtered = remove_small_regions(tumor_mask, p.small_region_fraction);
  const BinaryMask filled = fill_holes(filtered);
  const BinaryMask low = downsample(filled, std::min(p.working_magnification, filled.magnification()));
  BinaryMask area = dilate(low, p.kernel_side, p.iterations);
  est.contours_after_dilation = contour_count(area);
  if (est.contours_after_dilation > p.max_contours) {
    area = convex_hull_mask(area);
    est.hull_applied = true;
  }
  est.area = std::move(area);
  return est;
}

/// Closes gaps in hand-drawn marker strokes and fills the enclosed area.
/// The result is strokes ∪ erode(fill_holes(dilate(strokes, r)), r).
inline BinaryMask fill_ink_region(const BinaryMask& ink, int closing_radius = 10) {
  if (ink.empty()) throw InvalidInput("fill_ink_region: no ink present");
  dnayield::detail::require(closing_radius >= 0, "fill_ink_region: negative closing radius");
  const int side = 2 * closing_radius + 1;
  const BinaryMask closed_filled = fill_holes(dilate(ink, side, 1));
  return mask_union(ink, erode(closed_filled, side, 1));
}

}  // namespace dnayield::mask
