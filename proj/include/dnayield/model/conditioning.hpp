#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "dnayield/core/error.hpp"
#include "dnayield/core/quantile.hpp"

namespace dnayield {

/// Per-feature clipping bounds saved from training data, so that single
/// vectors can be made strictly positive at inference time.
struct ConditioningSpec {
  static constexpr double kOffset = 1e-3;

  std::vector<double> p05;   // 0.5th percentile
  std::vector<double> p995;  // 99.5th percentile
  std::vector<double> range; // p995 - p05, or 1 for a constant feature

  std::size_t size() const { return p05.size(); }

  /// Non-finite -> 0, clamp to [p05, p995], map onto [0, 1], add the offset.
  /// The result lies in [1e-3, 1 + 1e-3].
  double prepare(double x, std::size_t j) const {
    if (!std::isfinite(x)) x = 0.0;
    x = std::clamp(x, p05[j], p995[j]);
    return (x - p05[j]) / range[j] + kOffset;
  }
};

/// `x` holds one training vector per row.
inline ConditioningSpec fit_conditioning(const Eigen::MatrixXd& x) {
  detail::require(x.rows() >= 2, "conditioning needs at least two training vectors");
  ConditioningSpec c;
  const auto p = static_cast<std::size_t>(x.cols());
  c.p05.resize(p);
  c.p995.resize(p);
  c.range.resize(p);
  std::vector<double> col(static_cast<std::size_t>(x.rows()));
  for (std::size_t j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double v = x(i, static_cast<Eigen::Index>(j));
      col[static_cast<std::size_t>(i)] = std::isfinite(v) ? v : 0.0;
    }
    std::sort(col.begin(), col.end());
    c.p05[j] = sorted_percentile(col, 0.5);
    c.p995[j] = sorted_percentile(col, 99.5);
    const double r = c.p995[j] - c.p05[j];
    c.range[j] = r > 0.0 ? r : 1.0;
  }
  return c;
}

inline std::vector<double> prepare_features(std::span<const double> raw, const ConditioningSpec& c) {
  if (raw.size() != c.size())
    throw InvalidInput("feature vector has " + std::to_string(raw.size()) + " values, conditioning expects " +
                       std::to_string(c.size()));
  std::vector<double> out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) out[j] = c.prepare(raw[j], j);
  return out;
}

inline Eigen::MatrixXd prepare_features(const Eigen::MatrixXd& raw, const ConditioningSpec& c) {
  detail::require(static_cast<std::size_t>(raw.cols()) == c.size(), "feature matrix width does not match conditioning");
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j)
    for (Eigen::Index i = 0; i < raw.rows(); ++i) out(i, j) = c.prepare(raw(i, j), static_cast<std::size_t>(j));
  return out;
}

}  // namespace dnayield
