#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dnayield/core/error.hpp"

namespace dnayield {

/// Linear-interpolation percentile of already sorted data (position (n-1)*p/100).
inline double sorted_percentile(std::span<const double> sorted, double pct) {
  detail::require(!sorted.empty(), "percentile of empty data");
  if (sorted.size() == 1) return sorted.front();
  const double pos = (static_cast<double>(sorted.size()) - 1.0) * pct / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline double percentile(std::span<const double> values, double pct) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return sorted_percentile(v, pct);
}

inline double median(std::span<const double> values) { return percentile(values, 50.0); }

inline double mean(std::span<const double> values) {
  detail::require(!values.empty(), "mean of empty data");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

/// Unbiased (n-1) sample variance.
inline double sample_variance(std::span<const double> values) {
  detail::require(values.size() >= 2, "sample variance needs at least two values");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

inline double pearson_r(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size() && a.size() >= 2, "pearson_r needs paired data");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace dnayield
