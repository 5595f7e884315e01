#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <Eigen/Dense>

#include "dnayield/core/error.hpp"
#include "dnayield/core/quantile.hpp"
#include "dnayield/core/random.hpp"

namespace dnayield::stats {

namespace impl {

inline double clamp_p(double p) { return std::isnan(p) ? 1.0 : std::clamp(p, 0.0, 1.0); }

inline double chi2_sf(double x, double dof) {
  if (!(x > 0.0)) return 1.0;
  if (std::isinf(x)) return 0.0;
  return clamp_p(boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), x)));
}

inline double normal_sf(double z) {
  if (std::isinf(z)) return z > 0 ? 0.0 : 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::normal(), z));
}

inline double t_two_sided(double t, double dof) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  if (std::isinf(dof)) return clamp_p(2.0 * normal_sf(std::abs(t)));
  return clamp_p(2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(dof), std::abs(t))));
}

}  // namespace impl

// ---- contingency tables ---------------------------------------------------------

struct Chi2Result {
  double statistic = 0.0;
  int dof = 0;
  double p = 1.0;
  bool yates = false;
};

/// Pearson chi-squared test of independence. 2x2 tables get the Yates
/// continuity correction: each observed count moves toward its expected count
/// by min(0.5, |O - E|).
inline Chi2Result chi2_contingency(const Eigen::MatrixXd& table) {
  const auto r = table.rows(), c = table.cols();
  detail::require(r >= 2 && c >= 2, "contingency table needs at least 2 rows and 2 columns");
  detail::require(table.allFinite() && (table.array() >= 0.0).all(), "contingency counts must be finite and >= 0");
  const Eigen::VectorXd rows = table.rowwise().sum();
  const Eigen::RowVectorXd cols = table.colwise().sum();
  for (Eigen::Index i = 0; i < r; ++i) detail::require(rows[i] > 0, "contingency table has an all-zero row");
  for (Eigen::Index j = 0; j < c; ++j) detail::require(cols[j] > 0, "contingency table has an all-zero column");
  const double total = rows.sum();
  Chi2Result res;
  res.dof = static_cast<int>((r - 1) * (c - 1));
  res.yates = res.dof == 1;
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) {
      const double e = rows[i] * cols[j] / total;
      double d = std::abs(table(i, j) - e);
      if (res.yates) d -= std::min(0.5, d);
      res.statistic += d * d / e;
    }
  res.p = impl::chi2_sf(res.statistic, res.dof);
  return res;
}

// ---- sample size ------------------------------------------------------------------

enum class ZSource { tabulated, exact };

/// Standard-normal quantile. Tabulated mode returns the rounded values found
/// in printed sample-size tables for the common levels, and the exact
/// quantile otherwise.
inline double z_quantile(double q, ZSource src = ZSource::tabulated) {
  detail::require(q > 0.0 && q < 1.0, "quantile level must be in (0, 1)");
  if (src == ZSource::tabulated) {
    static const std::pair<double, double> table[] = {
        {0.8, 0.84},   {0.85, 1.036}, {0.9, 1.282},  {0.95, 1.645},  {0.975, 1.96},
        {0.99, 2.326}, {0.995, 2.576}, {0.999, 3.09}, {0.9995, 3.291},
    };
    for (const auto& [level, z] : table)
      if (std::abs(q - level) < 1e-12) return z;
  }
  return boost::math::quantile(boost::math::normal(), q);
}

struct SampleSize {
  double effect_size = 0.0;
  double n_exact = 0.0;  // before rounding
  long n_per_group = 0;
};

/// n = 2 ((z_{1-a/2} + z_{1-b}) / ES)^2 rounded to the nearest integer, with
/// ES = |p1 - p2| / sqrt(pbar (1 - pbar)).
inline SampleSize sample_size_two_proportions(double p1, double p2, double alpha, double power,
                                              ZSource src = ZSource::tabulated) {
  detail::require(p1 > 0.0 && p1 <= 1.0 && p2 > 0.0 && p2 <= 1.0, "proportions must be in (0, 1]");
  detail::require(alpha > 0.0 && alpha < 1.0 && power > 0.0 && power < 1.0, "alpha and power must be in (0, 1)");
  if (p1 == p2) throw InvalidInput("zero effect size: p1 equals p2");
  const double pbar = 0.5 * (p1 + p2);
  SampleSize s;
  s.effect_size = std::abs(p1 - p2) / std::sqrt(pbar * (1.0 - pbar));
  const double z = z_quantile(1.0 - alpha / 2.0, src) + z_quantile(power, src);
  s.n_exact = 2.0 * (z / s.effect_size) * (z / s.effect_size);
  s.n_per_group = std::lround(s.n_exact);
  return s;
}

// ---- count tests --------------------------------------------------------------------

inline std::vector<long> zeroed(std::span<const long> counts) {
  std::vector<long> out;
  out.reserve(counts.size());
  for (long c : counts) {
    if (c < 1) throw InvalidInput("zeroed counts need every count >= 1");
    out.push_back(c - 1);
  }
  return out;
}

/// Two-sided exact binomial test: sums outcome probabilities no larger than
/// the observed one (relative slack 1e-7, as in common implementations).
inline double binomial_test(long k, long n, double p) {
  detail::require(n >= 0 && k >= 0 && k <= n, "binomial test needs 0 <= k <= n");
  detail::require(p >= 0.0 && p <= 1.0, "binomial probability must be in [0, 1]");
  if (n == 0) return 1.0;
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const boost::math::binomial dist(static_cast<double>(n), p);
  const double observed = boost::math::pdf(dist, static_cast<double>(k));
  const double cut = observed * (1.0 + 1e-7);
  double total = 0.0;
  for (long i = 0; i <= n; ++i) {
    const double pi = boost::math::pdf(dist, static_cast<double>(i));
    if (pi <= cut) total += pi;
  }
  return impl::clamp_p(total);
}

struct RateRatioResult {
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double p = 1.0;
  long sum_a = 0, sum_b = 0;
};

/// Exact conditional test of equal Poisson rates. Each list entry is one unit
/// of exposure, so exposures are the list lengths.
inline RateRatioResult poisson_rate_ratio_test(std::span<const long> a, std::span<const long> b) {
  detail::require(!a.empty() && !b.empty(), "rate-ratio test needs non-empty samples");
  RateRatioResult r;
  for (long v : a) {
    detail::require(v >= 0, "rate-ratio test needs counts >= 0");
    r.sum_a += v;
  }
  for (long v : b) {
    detail::require(v >= 0, "rate-ratio test needs counts >= 0");
    r.sum_b += v;
  }
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  if (r.sum_a + r.sum_b == 0) return r;  // no events: ratio undefined, no evidence
  r.ratio = (r.sum_a / na) / (r.sum_b / nb);
  r.p = binomial_test(r.sum_a, r.sum_a + r.sum_b, na / (na + nb));
  return r;
}

// ---- t test -------------------------------------------------------------------------

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;
  double mean_a = 0.0, mean_b = 0.0;
};

inline WelchResult welch_t_test(std::span<const double> a_in, std::span<const double> b_in, bool log_transform = false) {
  detail::require(a_in.size() >= 2 && b_in.size() >= 2, "Welch test needs at least two values per group");
  std::vector<double> a(a_in.begin(), a_in.end()), b(b_in.begin(), b_in.end());
  if (log_transform) {
    for (auto* v : {&a, &b})
      for (double& x : *v) {
        if (!(x > 0.0)) throw InvalidInput("log-scale Welch test needs positive values");
        x = std::log(x);
      }
  }
  WelchResult w;
  w.mean_a = mean(a);
  w.mean_b = mean(b);
  const double sa = sample_variance(a) / static_cast<double>(a.size());
  const double sb = sample_variance(b) / static_cast<double>(b.size());
  const double se2 = sa + sb;
  if (se2 == 0.0) {
    if (w.mean_a == w.mean_b) return w;  // t = 0, p = 1
    w.t = w.mean_a > w.mean_b ? INFINITY : -INFINITY;
    w.dof = static_cast<double>(a.size() + b.size() - 2);
    w.p = 0.0;
    return w;
  }
  w.t = (w.mean_a - w.mean_b) / std::sqrt(se2);
  w.dof = se2 * se2 / (sa * sa / (a.size() - 1.0) + sb * sb / (b.size() - 1.0));
  w.p = impl::t_two_sided(w.t, w.dof);
  return w;
}

// ---- bootstrap ----------------------------------------------------------------------

enum class BootstrapStatistic { mean };

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap interval.
inline Interval bootstrap_ci(std::span<const double> values, BootstrapStatistic stat, int n_boot, double level,
                             std::uint64_t seed) {
  detail::require(!values.empty(), "bootstrap needs data");
  detail::require(n_boot >= 1, "bootstrap needs n_boot >= 1");
  detail::require(level > 0.0 && level < 1.0, "confidence level must be in (0, 1)");
  (void)stat;  // only the mean is defined
  Rng rng(seed);
  const auto n = static_cast<std::int64_t>(values.size());
  std::vector<double> stats(static_cast<std::size_t>(n_boot));
  for (auto& s : stats) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += values[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
    s = acc / static_cast<double>(n);
  }
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - level) / 2.0 * 100.0;
  Interval ci{sorted_percentile(stats, tail), sorted_percentile(stats, 100.0 - tail)};
  if (ci.hi < ci.lo) std::swap(ci.lo, ci.hi);
  return ci;
}

// ---- uniformity -----------------------------------------------------------------------

/// Kolmogorov limiting distribution, P(K > x).
inline double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return impl::clamp_p(2.0 * s);
}

struct KsResult {
  double d = 0.0;
  double p = 1.0;
};

/// One-sample KS test against U(0, 1); p from the limiting distribution with
/// Stephens' small-sample correction.
inline KsResult ks_uniform(std::span<const double> x) {
  detail::require(!x.empty(), "KS test needs data");
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  KsResult r;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = std::clamp(v[i], 0.0, 1.0);
    r.d = std::max({r.d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  r.p = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * r.d);
  return r;
}

}  // namespace dnayield::stats
