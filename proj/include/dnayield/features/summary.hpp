#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dnayield/core/error.hpp"
#include "dnayield/core/quantile.hpp"

namespace dnayield::features {

/// Fixed, ordered summary-statistic sets emitted per feature.
enum class StatSet { S12, S30 };

inline constexpr std::size_t stat_count(StatSet s) { return s == StatSet::S12 ? 12 : 30; }

inline const std::vector<std::string>& stat_names(StatSet s) {
  static const std::vector<std::string> s12 = {"mean", "std", "min", "max", "median", "p10",
                                               "p25", "p75", "p90", "skewness", "kurtosis", "iqr"};
  static const std::vector<std::string> s30 = [] {
    auto v = s12;
    for (const char* n : {"variance", "range", "mad", "cv", "sum", "p1", "p5", "p20", "p30", "p40",
                          "p60", "p70", "p80", "p95", "p99", "trimmed_mean10", "entropy16",
                          "mean_abs_dev"})
      v.emplace_back(n);
    return v;
  }();
  return s == StatSet::S12 ? s12 : s30;
}

/// Population moments. Skewness is m3/m2^1.5, kurtosis is excess (m4/m2^2 - 3);
/// both are 0 for constant data.
struct Moments {
  double mean = 0.0;
  double std = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
};

inline Moments moments(std::span<const double> v) {
  Moments m;
  if (v.empty()) return m;
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += x;
  m.mean = s / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.std = std::sqrt(m2);
  // Relative cutoff: rounding noise in a constant list must not read as spread.
  if (m2 > 1e-24 * std::max(1.0, m.mean * m.mean)) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

/// Shannon entropy (bits) of a `bins`-bin histogram over [lo, hi].
inline double histogram_entropy(std::span<const double> v, double lo, double hi, int bins = 16) {
  if (v.empty() || !(hi > lo)) return 0.0;
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (double x : v) {
    auto b = static_cast<long>(std::floor((x - lo) / (hi - lo) * bins));
    b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  double h = 0.0;
  const double n = static_cast<double>(v.size());
  for (auto c : counts)
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log2(p);
    }
  return h;
}

/// Mean after dropping floor(0.1 n) values from each end of the sorted data.
inline double trimmed_mean(std::span<const double> sorted, double proportion = 0.1) {
  const auto cut = static_cast<std::size_t>(std::floor(proportion * static_cast<double>(sorted.size())));
  double s = 0.0;
  for (std::size_t i = cut; i < sorted.size() - cut; ++i) s += sorted[i];
  return s / static_cast<double>(sorted.size() - 2 * cut);
}

/// Winsorizes to [P(lo_pct), P(hi_pct)] and emits the ordered statistic set.
inline std::vector<double> clip_and_summarize(std::span<const double> values, double lo_pct,
                                              double hi_pct, StatSet set) {
  detail::require(!values.empty(), "clip_and_summarize: empty input");
  detail::require(0.0 <= lo_pct && lo_pct < hi_pct && hi_pct <= 100.0,
                  "clip_and_summarize: need 0 <= lo < hi <= 100");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double lo = sorted_percentile(v, lo_pct), hi = sorted_percentile(v, hi_pct);
  for (double& x : v) x = std::clamp(x, lo, hi);  // stays sorted

  const auto mo = moments(v);
  const double mn = v.front(), mx = v.back();
  auto pct = [&](double p) { return sorted_percentile(v, p); };
  const double p25 = pct(25), p75 = pct(75);
  std::vector<double> out = {mo.mean, mo.std, mn,       mx,          pct(50),     pct(10),
                             p25,     p75,    pct(90),  mo.skewness, mo.kurtosis, p75 - p25};
  if (set == StatSet::S12) return out;

  const double med = pct(50);
  std::vector<double> absdev(v.size());
  double sum = 0.0, mean_abs = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    absdev[i] = std::abs(v[i] - med);
    sum += v[i];
    mean_abs += std::abs(v[i] - mo.mean);
  }
  std::sort(absdev.begin(), absdev.end());
  const double cv = mo.mean != 0.0 ? mo.std / std::abs(mo.mean) : 0.0;
  for (double x : {mo.std * mo.std, mx - mn, sorted_percentile(absdev, 50), cv, sum, pct(1), pct(5),
                   pct(20), pct(30), pct(40), pct(60), pct(70), pct(80), pct(95), pct(99),
                   trimmed_mean(v), histogram_entropy(v, mn, mx),
                   mean_abs / static_cast<double>(v.size())})
    out.push_back(x);
  return out;
}

}  // namespace dnayield::features
