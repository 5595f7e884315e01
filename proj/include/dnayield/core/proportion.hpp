#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace dnayield {

struct Proportion {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Normal-approximation 95% interval, clipped to [0, 1].
inline Proportion normal_ci(std::size_t k, std::size_t n, double z = 1.959963984540054) {
  Proportion p;
  if (n == 0) return p;
  p.value = static_cast<double>(k) / static_cast<double>(n);
  const double half = z * std::sqrt(p.value * (1.0 - p.value) / static_cast<double>(n));
  p.lo = std::max(0.0, p.value - half);
  p.hi = std::min(1.0, p.value + half);
  return p;
}

}  // namespace dnayield
