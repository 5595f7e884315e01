#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dnayield/core/error.hpp"
#include "dnayield/core/random.hpp"
#include "dnayield/stats/glm.hpp"
#include "dnayield/stats/hypothesis.hpp"

namespace dnayield::stats {

struct ResidualDiagnostics {
  std::vector<double> scaled;  // one per observation, in [0, 1]
  double ks_d = 0.0;
  double ks_p = 1.0;
  double dispersion_ratio = 1.0;  // observed / mean simulated residual variance
  double dispersion_p = 1.0;
  long outliers = 0;  // observations outside every simulated value
  double outlier_p = 1.0;
};

namespace impl {

inline double simulate_response(Family f, double mu, double dispersion, Rng& rng) {
  switch (f) {
    case Family::binomial_logit: return rng.bernoulli(mu) ? 1.0 : 0.0;
    case Family::gaussian_identity: return rng.normal(mu, std::sqrt(dispersion));
    case Family::poisson_log: return static_cast<double>(rng.poisson(mu));
    case Family::gamma_log: {
      const double shape = 1.0 / dispersion;
      return rng.gamma(shape, mu / shape);
    }
  }
  return mu;
}

}  // namespace impl

/// Simulation-based residual checks: draw n_sim response sets from the
/// fitted model, turn each observation into its (randomized) rank among the
/// draws, then test the ranks for uniformity, the raw residual variance for
/// over/under-dispersion and the count outside the simulated envelope.
inline ResidualDiagnostics residual_diagnostics(const GLMFit& fit, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                                int n_sim = 250, std::uint64_t seed = 0) {
  if (!fit.converged) throw InvalidInput("residual diagnostics need a converged fit");
  detail::require(n_sim >= 100, "residual diagnostics need n_sim >= 100");
  detail::require(x.rows() == y.size() && y.size() > 0, "design and response sizes differ");
  const Eigen::VectorXd mu = glm_predict(fit, x);
  const Eigen::Index n = y.size();
  Rng rng(seed);

  std::vector<long> below(static_cast<std::size_t>(n), 0), ties(static_cast<std::size_t>(n), 0);
  std::vector<double> sim_var(static_cast<std::size_t>(n_sim), 0.0);
  double obs_var = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) obs_var += (y[i] - mu[i]) * (y[i] - mu[i]);
  for (int s = 0; s < n_sim; ++s) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ys = impl::simulate_response(fit.family, mu[i], fit.dispersion, rng);
      v += (ys - mu[i]) * (ys - mu[i]);
      const auto k = static_cast<std::size_t>(i);
      if (ys < y[i]) ++below[k];
      else if (ys == y[i]) ++ties[k];
    }
    sim_var[static_cast<std::size_t>(s)] = v;
  }

  ResidualDiagnostics d;
  d.scaled.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < d.scaled.size(); ++i) {
    const double u = ties[i] ? rng.uniform() : 0.0;
    d.scaled[i] = std::clamp((below[i] + u * ties[i]) / n_sim, 0.0, 1.0);
    if (below[i] == n_sim || below[i] + ties[i] == 0) ++d.outliers;
  }
  const auto ks = ks_uniform(d.scaled);
  d.ks_d = ks.d;
  d.ks_p = ks.p;

  double mean_sim = 0.0;
  long ge = 0, le = 0;
  for (double v : sim_var) {
    mean_sim += v;
    ge += v >= obs_var;
    le += v <= obs_var;
  }
  mean_sim /= n_sim;
  d.dispersion_ratio = mean_sim > 0 ? obs_var / mean_sim : (obs_var > 0 ? INFINITY : 1.0);
  const double tail = std::min(ge + 1.0, le + 1.0) / (n_sim + 1.0);
  d.dispersion_p = std::min(1.0, 2.0 * tail);

  d.outlier_p = binomial_test(d.outliers, n, 2.0 / (n_sim + 1.0));
  return d;
}

}  // namespace dnayield::stats
