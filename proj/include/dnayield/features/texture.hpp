#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "dnayield/core/quantile.hpp"
#include "dnayield/features/cells.hpp"
#include "dnayield/features/image.hpp"
#include "dnayield/features/summary.hpp"

namespace dnayield::features {

inline constexpr std::size_t kTextureChannels = 6;
inline constexpr std::size_t kTextureStats = 15;
inline constexpr std::size_t kTexturePerCell = kTextureChannels * kTextureStats;

inline const std::array<const char*, kTextureChannels>& texture_channel_names() {
  static const std::array<const char*, kTextureChannels> n = {"red", "green", "blue", "gray", "saturation", "hue"};
  return n;
}

inline const std::array<const char*, kTextureStats>& texture_stat_names() {
  static const std::array<const char*, kTextureStats> n = {
      "mean", "std", "min", "max", "median", "p10", "p25", "p75", "p90", "iqr", "entropy16",
      "skewness", "kurtosis", "edge_fraction", "gradient_mean"};
  return n;
}

/// Upper end of each channel's value range: 8-bit levels, hue in degrees.
inline constexpr std::array<double, kTextureChannels> kChannelRange = {256, 256, 256, 256, 256, 360};

/// The six channel values of one RGB pixel. Saturation is HSV saturation
/// scaled to 0-255; hue is in [0, 360) and 0 for grays.
inline std::array<double, kTextureChannels> pixel_channels(const std::uint8_t* p) {
  const double r = p[0], g = p[1], b = p[2];
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double c = mx - mn;
  double hue = 0.0;
  if (c > 0) {
    if (mx == r)
      hue = 60.0 * std::fmod((g - b) / c + 6.0, 6.0);
    else if (mx == g)
      hue = 60.0 * ((b - r) / c + 2.0);
    else
      hue = 60.0 * ((r - g) / c + 4.0);
  }
  return {r, g, b, 0.299 * r + 0.587 * g + 0.114 * b, mx > 0 ? 255.0 * c / mx : 0.0, hue};
}

struct PixelBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open
};

/// Integer pixel box covering a bbox, or nullopt if it leaves the image.
inline std::optional<PixelBox> pixel_box(const BBox& b, int width, int height) {
  PixelBox p;
  p.x0 = static_cast<int>(std::floor(b.x));
  p.y0 = static_cast<int>(std::floor(b.y));
  p.x1 = std::max(p.x0 + 1, static_cast<int>(std::ceil(b.x + b.w)));
  p.y1 = std::max(p.y0 + 1, static_cast<int>(std::ceil(b.y + b.h)));
  if (p.x0 < 0 || p.y0 < 0 || p.x1 > width || p.y1 > height) return std::nullopt;
  return p;
}

/// 15 statistics of one channel over a w x h patch (row-major values).
inline std::array<double, kTextureStats> channel_stats(const std::vector<double>& v, int w, int h, double range_hi) {
  std::array<double, kTextureStats> s{};
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  const auto mo = moments(v);
  const double p25 = sorted_percentile(sorted, 25), p75 = sorted_percentile(sorted, 75);
  s[0] = mo.mean;
  s[1] = mo.std;
  s[2] = sorted.front();
  s[3] = sorted.back();
  s[4] = sorted_percentile(sorted, 50);
  s[5] = sorted_percentile(sorted, 10);
  s[6] = p25;
  s[7] = p75;
  s[8] = sorted_percentile(sorted, 90);
  s[9] = p75 - p25;
  s[10] = histogram_entropy(v, 0.0, range_hi);
  s[11] = mo.skewness;
  s[12] = mo.kurtosis;

  // Sobel with replicated borders.
  auto at = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return v[static_cast<std::size_t>(y) * w + x];
  };
  const double threshold = 0.1 * sorted.back();
  double grad_sum = 0.0;
  std::size_t edges = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
      const double gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
      const double g = std::hypot(gx, gy);
      grad_sum += g;
      edges += g > threshold;
    }
  const double n = static_cast<double>(v.size());
  s[13] = static_cast<double>(edges) / n;
  s[14] = grad_sum / n;
  return s;
}

/// 90 per-cell values (channel-major) for the patch under one bbox.
inline std::array<double, kTexturePerCell> patch_texture(const RgbImage& im, const PixelBox& b) {
  const int w = b.x1 - b.x0, h = b.y1 - b.y0;
  std::array<std::vector<double>, kTextureChannels> ch;
  for (auto& c : ch) c.reserve(static_cast<std::size_t>(w) * h);
  for (int y = b.y0; y < b.y1; ++y)
    for (int x = b.x0; x < b.x1; ++x) {
      const auto px = pixel_channels(im.pixel(x, y));
      for (std::size_t c = 0; c < kTextureChannels; ++c) ch[c].push_back(px[c]);
    }
  std::array<double, kTexturePerCell> out{};
  for (std::size_t c = 0; c < kTextureChannels; ++c) {
    const auto s = channel_stats(ch[c], w, h, kChannelRange[c]);
    std::copy(s.begin(), s.end(), out.begin() + static_cast<std::ptrdiff_t>(c * kTextureStats));
  }
  return out;
}

struct TextureResult {
  std::vector<double> values;  // 90 x 30
  bool skipped = false;        // no image supplied
  std::size_t outside_image = 0;
};

inline TextureResult cell_texture_features(const RgbImage* image, const std::vector<ClassifiedCell>& cells) {
  TextureResult res;
  res.values.assign(kTexturePerCell * stat_count(StatSet::S30), 0.0);
  if (image == nullptr || image->empty()) {
    res.skipped = true;
    return res;
  }
  std::vector<std::array<double, kTexturePerCell>> rows;
  rows.reserve(cells.size());
  for (const auto& c : cells) {
    const auto box = pixel_box(c.detection.bbox, image->width(), image->height());
    if (!box) {
      ++res.outside_image;
      continue;
    }
    rows.push_back(patch_texture(*image, *box));
  }
  if (rows.empty()) return res;
  std::vector<double> col(rows.size());
  for (std::size_t f = 0; f < kTexturePerCell; ++f) {
    for (std::size_t r = 0; r < rows.size(); ++r) col[r] = rows[r][f];
    const auto s = clip_and_summarize(col, 1.0, 99.0, StatSet::S30);
    std::copy(s.begin(), s.end(), res.values.begin() + static_cast<std::ptrdiff_t>(f * s.size()));
  }
  return res;
}

}  // namespace dnayield::features
