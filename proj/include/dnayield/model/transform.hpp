#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dnayield/core/error.hpp"

namespace dnayield {

enum class TransformKind { natural_log, box_cox };

inline const char* to_string(TransformKind k) { return k == TransformKind::natural_log ? "natural_log" : "box_cox"; }

inline TransformKind parse_transform_kind(std::string_view s) {
  if (s == "natural_log" || s == "log") return TransformKind::natural_log;
  if (s == "box_cox" || s == "boxcox") return TransformKind::box_cox;
  throw InvalidInput("unknown transform '" + std::string(s) + "'");
}

struct TransformSpec {
  TransformKind kind = TransformKind::natural_log;
  double lambda = 0.0;  // box_cox only
};

/// (x^l - 1)/l, written through expm1 so that l -> 0 meets ln(x) smoothly.
inline double box_cox(double x, double lambda) {
  const double lx = std::log(x);
  if (lambda == 0.0) return lx;
  return std::expm1(lambda * lx) / lambda;
}

inline double box_cox_inverse(double y, double lambda) {
  if (lambda == 0.0) return std::exp(y);
  return std::exp(std::log1p(lambda * y) / lambda);
}

inline double forward(double x, const TransformSpec& t) {
  if (!(x > 0.0)) throw InvalidInput("power transforms need strictly positive input");
  return t.kind == TransformKind::natural_log ? std::log(x) : box_cox(x, t.lambda);
}

inline double inverse(double y, const TransformSpec& t) {
  return t.kind == TransformKind::natural_log ? std::exp(y) : box_cox_inverse(y, t.lambda);
}

inline std::vector<double> forward(std::span<const double> xs, const TransformSpec& t) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(forward(x, t));
  return out;
}

inline std::vector<double> inverse(std::span<const double> ys, const TransformSpec& t) {
  std::vector<double> out;
  out.reserve(ys.size());
  for (double y : ys) out.push_back(inverse(y, t));
  return out;
}

/// Box-Cox profile log-likelihood: -n/2 ln(var_l) + (l - 1) sum ln x.
inline double box_cox_llf(std::span<const double> logs, double lambda) {
  const double n = static_cast<double>(logs.size());
  std::vector<double> y(logs.size());
  double s = 0, sum_log = 0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    y[i] = lambda == 0.0 ? logs[i] : std::expm1(lambda * logs[i]) / lambda;
    s += y[i];
    sum_log += logs[i];
  }
  const double mean = s / n;
  double var = 0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0)) return -std::numeric_limits<double>::infinity();
  return -0.5 * n * std::log(var) + (lambda - 1.0) * sum_log;
}

/// Maximum-likelihood lambda on a 401-point grid over [-2, 2]. Degenerate
/// (constant) data has no maximizer; lambda = 1 is returned.
inline double fit_box_cox_lambda(std::span<const double> x) {
  detail::require(x.size() >= 2, "Box-Cox fit needs at least two values");
  std::vector<double> logs;
  logs.reserve(x.size());
  for (double v : x) {
    if (!(v > 0.0)) throw InvalidInput("Box-Cox fit needs strictly positive values");
    logs.push_back(std::log(v));
  }
  double mn = logs[0], mx = logs[0];
  for (double l : logs) {
    mn = std::min(mn, l);
    mx = std::max(mx, l);
  }
  if (mx - mn <= 1e-12 * std::max(1.0, std::abs(mx))) return 1.0;
  double best = 1.0, best_llf = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 400; ++i) {
    const double lambda = (i - 200) / 100.0;
    const double l = box_cox_llf(logs, lambda);
    if (l > best_llf) {
      best_llf = l;
      best = lambda;
    }
  }
  return best;
}

}  // namespace dnayield
