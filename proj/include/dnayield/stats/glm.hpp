#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <Eigen/Dense>

#include "dnayield/core/error.hpp"
#include "dnayield/core/text.hpp"
#include "dnayield/stats/hypothesis.hpp"

namespace dnayield::stats {

enum class Family { binomial_logit, gaussian_identity, poisson_log, gamma_log };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::binomial_logit: return "binomial_logit";
    case Family::gaussian_identity: return "gaussian_identity";
    case Family::poisson_log: return "poisson_log";
    case Family::gamma_log: return "gamma_log";
  }
  return "?";
}

/// Families with an estimated dispersion report t statistics.
inline bool uses_t(Family f) { return f == Family::gaussian_identity || f == Family::gamma_log; }

struct GLMFit {
  Family family = Family::gaussian_identity;
  std::vector<std::string> names;
  Eigen::VectorXd coef, se, statistic, p;
  double aic = std::numeric_limits<double>::quiet_NaN();
  double log_lik = std::numeric_limits<double>::quiet_NaN();
  double null_deviance = 0.0;
  double residual_deviance = 0.0;
  double dispersion = 1.0;
  double df_residual = 0.0;
  double df_null = 0.0;
  bool converged = false;
  int iterations = 0;
  double last_change = 0.0;  // relative deviance change at exit
  bool separation = false;   // binomial fits pinned at 0 or 1
  double gamma_shape = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd mu;

  std::size_t term(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    throw InvalidInput("no term named '" + name + "'");
  }
};

struct GlmOptions {
  double tol = 1e-8;
  int max_iter = 100;
};

namespace impl {

inline double inv_logit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

inline double linkinv(Family f, double eta) {
  switch (f) {
    case Family::binomial_logit: {
      constexpr double eps = std::numeric_limits<double>::epsilon();
      return std::clamp(inv_logit(eta), eps, 1.0 - eps);
    }
    case Family::gaussian_identity: return eta;
    case Family::poisson_log:
    case Family::gamma_log: return std::max(std::exp(eta), std::numeric_limits<double>::epsilon());
  }
  return eta;
}

inline double link(Family f, double mu) {
  switch (f) {
    case Family::binomial_logit: return std::log(mu / (1.0 - mu));
    case Family::gaussian_identity: return mu;
    default: return std::log(mu);
  }
}

inline double mu_eta(Family f, double mu) {
  switch (f) {
    case Family::binomial_logit: return std::max(mu * (1.0 - mu), std::numeric_limits<double>::epsilon());
    case Family::gaussian_identity: return 1.0;
    default: return mu;
  }
}

inline double variance(Family f, double mu) {
  switch (f) {
    case Family::binomial_logit: return mu * (1.0 - mu);
    case Family::gaussian_identity: return 1.0;
    case Family::poisson_log: return mu;
    case Family::gamma_log: return mu * mu;
  }
  return 1.0;
}

inline double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

inline double unit_deviance(Family f, double y, double mu) {
  switch (f) {
    case Family::binomial_logit: return 2.0 * (xlogy(y, y / mu) + xlogy(1.0 - y, (1.0 - y) / (1.0 - mu)));
    case Family::gaussian_identity: return (y - mu) * (y - mu);
    case Family::poisson_log: return 2.0 * (xlogy(y, y / mu) - (y - mu));
    case Family::gamma_log: return -2.0 * (std::log(y / mu) - (y - mu) / mu);
  }
  return 0.0;
}

inline double deviance(Family f, const Eigen::VectorXd& y, const Eigen::VectorXd& mu, const Eigen::VectorXd& w) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (w[i] > 0) d += w[i] * unit_deviance(f, y[i], mu[i]);
  return d;
}

/// Shape maximising the gamma likelihood given the fitted means:
/// ln a - digamma(a) = D / (2 sum w).
inline double gamma_profile_shape(double dev, double wsum) {
  const double target = dev / (2.0 * wsum);
  if (!(target > 0.0)) return INFINITY;
  // ln a - digamma(a) ~ 1/(2a) for large a; start there and polish with Newton
  double a = 1.0 / (2.0 * target);
  if (a < 1e-3) a = 1e-3;
  for (int it = 0; it < 100; ++it) {
    const double g = std::log(a) - boost::math::digamma(a) - target;
    const double dg = 1.0 / a - boost::math::trigamma(a);
    double next = a - g / dg;
    if (!(next > 0.0)) next = a / 2.0;
    if (std::abs(next - a) <= 1e-14 * a) {
      a = next;
      break;
    }
    a = next;
  }
  return a;
}

inline double log_likelihood(Family f, const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                             const Eigen::VectorXd& w, double dev, double* shape_out) {
  double ll = 0.0;
  double wsum = 0.0, n_pos = 0.0, sum_log_w = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (w[i] > 0) {
      wsum += w[i];
      n_pos += 1.0;
      sum_log_w += std::log(w[i]);
    }
  switch (f) {
    case Family::binomial_logit:
      for (Eigen::Index i = 0; i < y.size(); ++i)
        if (w[i] > 0) ll += w[i] * (xlogy(y[i], mu[i]) + xlogy(1.0 - y[i], 1.0 - mu[i]));
      return ll;
    case Family::poisson_log:
      for (Eigen::Index i = 0; i < y.size(); ++i)
        if (w[i] > 0) ll += w[i] * (xlogy(y[i], mu[i]) - mu[i] - std::lgamma(y[i] + 1.0));
      return ll;
    case Family::gaussian_identity: {
      // ML variance dev / n, matching the usual glm convention
      const double n = n_pos;
      return -0.5 * (n * (std::log(2.0 * M_PI * dev / n) + 1.0) - sum_log_w);
    }
    case Family::gamma_log: {
      const double a = gamma_profile_shape(dev, wsum);
      if (shape_out) *shape_out = a;
      if (!std::isfinite(a)) return INFINITY;
      for (Eigen::Index i = 0; i < y.size(); ++i)
        if (w[i] > 0)
          ll += w[i] * (a * std::log(a * y[i] / mu[i]) - a * y[i] / mu[i] - std::log(y[i]) - std::lgamma(a));
      return ll;
    }
  }
  return ll;
}

inline void check_response(Family f, const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y[i];
    detail::require(std::isfinite(v), "response contains a non-finite value");
    switch (f) {
      case Family::binomial_logit:
        detail::require(v == 0.0 || v == 1.0, "binomial response must be 0 or 1");
        break;
      case Family::poisson_log:
        detail::require(v >= 0.0 && v == std::floor(v), "poisson response must be a non-negative integer");
        break;
      case Family::gamma_log:
        detail::require(v > 0.0, "gamma response must be positive");
        break;
      case Family::gaussian_identity: break;
    }
  }
}

inline bool has_intercept(const Eigen::MatrixXd& x) {
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    if ((x.col(j).array() == 1.0).all()) return true;
  return false;
}

}  // namespace impl

/// Column names that make the design rank deficient, or empty when it has
/// full column rank.
inline std::vector<std::string> rank_deficient_columns(const Eigen::MatrixXd& x, const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  std::vector<std::string> bad;
  const auto r = qr.rank();
  for (Eigen::Index k = r; k < x.cols(); ++k) bad.push_back(names[static_cast<std::size_t>(qr.colsPermutation().indices()[k])]);
  return bad;
}

/// IRLS fit. Prior weights default to 1.
inline GLMFit glm_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Family family,
                      std::optional<Eigen::VectorXd> weights = std::nullopt, std::vector<std::string> names = {},
                      const GlmOptions& opt = {}) {
  const Eigen::Index n = x.rows(), k = x.cols();
  detail::require(n > 0 && k > 0, "design matrix is empty");
  detail::require(y.size() == n, "response length does not match design rows");
  detail::require(x.allFinite(), "design matrix contains non-finite values");
  if (names.empty())
    for (Eigen::Index j = 0; j < k; ++j) names.push_back("x" + std::to_string(j));
  detail::require(static_cast<Eigen::Index>(names.size()) == k, "one name per design column is required");
  const Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(n);
  detail::require(w.size() == n, "weights length does not match design rows");
  detail::require(w.allFinite() && (w.array() >= 0.0).all(), "weights must be finite and >= 0");
  impl::check_response(family, y);

  // zero-weight rows carry no information; the rank check uses the rest
  std::vector<Eigen::Index> live;
  for (Eigen::Index i = 0; i < n; ++i)
    if (w[i] > 0) live.push_back(i);
  detail::require(!live.empty(), "all weights are zero");
  {
    Eigen::MatrixXd xl(static_cast<Eigen::Index>(live.size()), k);
    for (std::size_t i = 0; i < live.size(); ++i) xl.row(static_cast<Eigen::Index>(i)) = x.row(live[i]);
    const auto bad = rank_deficient_columns(xl, names);
    if (!bad.empty()) {
      std::string msg = "design matrix is rank deficient; aliased columns:";
      for (const auto& b : bad) msg += " " + b;
      throw InvalidInput(msg);
    }
  }
  const double n_obs = static_cast<double>(live.size());
  if (uses_t(family))
    detail::require(n_obs > static_cast<double>(k), "no residual degrees of freedom for a dispersion family");

  GLMFit fit;
  fit.family = family;
  fit.names = names;

  Eigen::VectorXd mu(n), eta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = y[i];
    if (family == Family::binomial_logit) m = (w[i] * y[i] + 0.5) / (w[i] + 1.0);
    if (family == Family::poisson_log) m = y[i] + 0.1;
    mu[i] = m;
    eta[i] = impl::link(family, m);
  }
  double dev = impl::deviance(family, y, mu, w);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  bool have_beta = false;

  for (int it = 1; it <= opt.max_iter; ++it) {
    fit.iterations = it;
    Eigen::MatrixXd xw(n, k);
    Eigen::VectorXd zw(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double g = impl::mu_eta(family, mu[i]);
      const double sw = std::sqrt(w[i] * g * g / impl::variance(family, mu[i]));
      const double z = eta[i] + (y[i] - mu[i]) / g;
      xw.row(i) = x.row(i) * sw;
      zw[i] = z * sw;
    }
    Eigen::VectorXd next = xw.colPivHouseholderQr().solve(zw);
    Eigen::VectorXd eta_new = x * next, mu_new(n);
    for (Eigen::Index i = 0; i < n; ++i) mu_new[i] = impl::linkinv(family, eta_new[i]);
    double dev_new = impl::deviance(family, y, mu_new, w);
    // step halving when the update overshoots into a non-finite deviance
    for (int h = 0; h < 30 && have_beta && !std::isfinite(dev_new); ++h) {
      next = 0.5 * (next + beta);
      eta_new = x * next;
      for (Eigen::Index i = 0; i < n; ++i) mu_new[i] = impl::linkinv(family, eta_new[i]);
      dev_new = impl::deviance(family, y, mu_new, w);
    }
    if (!std::isfinite(dev_new)) break;
    fit.last_change = std::abs(dev_new - dev) / (std::abs(dev_new) + 0.1);
    beta = next;
    have_beta = true;
    eta = eta_new;
    mu = mu_new;
    dev = dev_new;
    if (fit.last_change < opt.tol) {
      fit.converged = true;
      break;
    }
  }

  fit.coef = beta;
  fit.mu = mu;
  fit.residual_deviance = dev;
  fit.df_residual = n_obs - static_cast<double>(k);

  if (family == Family::binomial_logit) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (w[i] > 0 && (mu[i] < 1e-10 || mu[i] > 1.0 - 1e-10)) fit.separation = true;
    if (fit.separation && beta.cwiseAbs().maxCoeff() < 10.0) fit.separation = false;
  }

  if (uses_t(family)) {
    double pearson = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (w[i] > 0) pearson += w[i] * (y[i] - mu[i]) * (y[i] - mu[i]) / impl::variance(family, mu[i]);
    fit.dispersion = pearson / fit.df_residual;
  }

  // covariance from the information matrix at the final means
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double g = impl::mu_eta(family, mu[i]);
    const double wi = w[i] * g * g / impl::variance(family, mu[i]);
    info.noalias() += wi * x.row(i).transpose() * x.row(i);
  }
  const Eigen::MatrixXd cov = fit.dispersion * info.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  fit.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  fit.statistic = fit.coef.cwiseQuotient(fit.se);
  fit.p.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double s = fit.statistic[j];
    fit.p[j] = uses_t(family) ? impl::t_two_sided(s, fit.df_residual) : impl::t_two_sided(s, INFINITY);
  }

  // null model: weighted mean with an intercept, eta = 0 without
  Eigen::VectorXd mu0(n);
  if (impl::has_intercept(x)) {
    double sy = 0.0, sw = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      sy += w[i] * y[i];
      sw += w[i];
    }
    mu0.setConstant(sy / sw);
    fit.df_null = n_obs - 1.0;
  } else {
    for (Eigen::Index i = 0; i < n; ++i) mu0[i] = impl::linkinv(family, 0.0);
    fit.df_null = n_obs;
  }
  fit.null_deviance = impl::deviance(family, y, mu0, w);

  fit.log_lik = impl::log_likelihood(family, y, mu, w, dev, &fit.gamma_shape);
  const double n_par = static_cast<double>(k) + (uses_t(family) ? 1.0 : 0.0);
  fit.aic = 2.0 * n_par - 2.0 * fit.log_lik;
  return fit;
}

/// Linear predictor mapped through the inverse link.
inline Eigen::VectorXd glm_predict(const GLMFit& fit, const Eigen::MatrixXd& x) {
  detail::require(x.cols() == fit.coef.size(), "design width does not match the fit");
  Eigen::VectorXd eta = x * fit.coef;
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = impl::linkinv(fit.family, eta[i]);
  return eta;
}

/// Coefficient table in the usual glm summary layout, one row per term.
inline std::string format_glm_csv(const GLMFit& fit) {
  const std::string stat = uses_t(fit.family) ? "t_value" : "z_value";
  std::string s = "term,estimate,std_error," + stat + ",p_value,aic,residual_deviance,null_deviance\n";
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    s += fit.names[j] + "," + text::format_double(fit.coef[i]) + "," + text::format_double(fit.se[i]) + "," +
         text::format_double(fit.statistic[i]) + "," + text::format_double(fit.p[i]) + "," +
         text::format_double(fit.aic) + "," + text::format_double(fit.residual_deviance) + "," +
         text::format_double(fit.null_deviance) + "\n";
  }
  return s;
}

inline std::string format_glm_summary(const GLMFit& fit) {
  const bool t = uses_t(fit.family);
  std::string s = "family: " + family_name(fit.family) + (fit.converged ? "" : "  (NOT CONVERGED)") +
                  (fit.separation ? "  (separation)" : "") + "\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-32s %12s %12s %9s %11s\n", "", "Estimate", "Std. Error", t ? "t value" : "z value",
                t ? "Pr(>|t|)" : "Pr(>|z|)");
  s += line;
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    const double p = fit.p[i];
    const char* star = p < 0.001 ? "***" : p < 0.01 ? "**" : p < 0.05 ? "*" : p < 0.1 ? "." : "";
    std::snprintf(line, sizeof line, "%-32s %12.5g %12.5g %9.3f %11.3g %s\n", fit.names[j].c_str(), fit.coef[i],
                  fit.se[i], fit.statistic[i], p, star);
    s += line;
  }
  std::snprintf(line, sizeof line, "Null deviance: %.5g on %g df\nResid. Dev.:   %.5g on %g df\nAIC: %.5g\n",
                fit.null_deviance, fit.df_null, fit.residual_deviance, fit.df_residual, fit.aic);
  s += line;
  if (t) {
    std::snprintf(line, sizeof line, "Dispersion: %.5g\n", fit.dispersion);
    s += line;
  }
  return s;
}

}  // namespace dnayield::stats
