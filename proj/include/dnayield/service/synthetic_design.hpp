#pragma once

#include <cmath>
#include <cstdint>

#include "dnayield/core/random.hpp"
#include "dnayield/model/sweep.hpp"

namespace dnayield::service {

/// Generic wide design: p uniform(0,1) raw features, of which the first
/// `informative` drive ln(y) = 4 + 0.5 sum ln(x_j + 0.01) + N(0, sigma).
inline Dataset sparse_log_design(int n, int p, int informative, double sigma, std::uint64_t seed) {
  detail::require(n >= 2 && p >= 1 && informative >= 0 && informative <= p, "bad sparse design shape");
  Rng rng(seed);
  Dataset d;
  d.x.resize(n, p);
  for (int i = 0; i < n; ++i) {
    double t = 4.0;
    for (int j = 0; j < p; ++j) d.x(i, j) = rng.uniform();
    for (int j = 0; j < informative; ++j) t += 0.5 * std::log(d.x(i, j) + 0.01);
    d.y.push_back(std::exp(t + rng.normal(0.0, sigma)));
    d.ids.push_back("r" + std::to_string(i));
  }
  for (int j = 0; j < p; ++j) d.feature_names.push_back("x" + std::to_string(j));
  return d;
}

}  // namespace dnayield::service
