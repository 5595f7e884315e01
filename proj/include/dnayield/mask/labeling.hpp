#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "dnayield/mask/binary_mask.hpp"

namespace dnayield::mask {

enum class Connectivity { four = 4, eight = 8 };

/// Connected-component labels; 0 is background, regions are numbered from 1
/// in raster-scan order of their first pixel.
struct RegionLabeling {
  int width = 0;
  int height = 0;
  std::vector<int> labels;
  std::vector<std::size_t> region_sizes;  // index 0 unused

  int region_count() const { return static_cast<int>(region_sizes.size()) - 1; }
  int label(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t largest_size() const {
    std::size_t m = 0;
    for (std::size_t i = 1; i < region_sizes.size(); ++i) m = std::max(m, region_sizes[i]);
    return m;
  }
};

namespace impl {

template <typename Pred>
RegionLabeling label_where(int w, int h, Pred&& is_member, Connectivity conn) {
  RegionLabeling out;
  out.width = w;
  out.height = h;
  out.labels.assign(static_cast<std::size_t>(w) * h, 0);
  out.region_sizes.assign(1, 0);
  std::vector<std::pair<int, int>> stack;
  const int n_dirs = conn == Connectivity::eight ? 8 : 4;
  static constexpr int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  int next = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (out.labels[i] != 0 || !is_member(x, y)) continue;
      ++next;
      std::size_t count = 0;
      out.labels[i] = next;
      stack.emplace_back(x, y);
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++count;
        for (int d = 0; d < n_dirs; ++d) {
          const int nx = cx + dx[d], ny = cy + dy[d];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          if (out.labels[j] != 0 || !is_member(nx, ny)) continue;
          out.labels[j] = next;
          stack.emplace_back(nx, ny);
        }
      }
      out.region_sizes.push_back(count);
    }
  }
  return out;
}

}  // namespace impl

inline RegionLabeling label_components(const BinaryMask& m, Connectivity conn = Connectivity::eight) {
  return impl::label_where(m.width(), m.height(), [&](int x, int y) { return m.at(x, y); }, conn);
}

/// Labels background components instead of foreground ones.
inline RegionLabeling label_background(const BinaryMask& m, Connectivity conn = Connectivity::four) {
  return impl::label_where(m.width(), m.height(), [&](int x, int y) { return !m.at(x, y); }, conn);
}

/// Number of separate 8-connected foreground contours.
inline int contour_count(const BinaryMask& m) { return label_components(m).region_count(); }

/// Mask holding only the pixels of one labeled region.
inline BinaryMask region_mask(const BinaryMask& like, const RegionLabeling& lab, int label) {
  BinaryMask out = like.blank_like();
  for (std::size_t i = 0; i < lab.labels.size(); ++i)
    if (lab.labels[i] == label) out.data()[i] = 1;
  return out;
}

}  // namespace dnayield::mask
