#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dnayield/core/error.hpp"

namespace dnayield {

enum class Regularization { L1, L2 };

inline const char* to_string(Regularization r) { return r == Regularization::L1 ? "L1" : "L2"; }

inline Regularization parse_regularization(std::string_view s) {
  if (s == "L1" || s == "l1") return Regularization::L1;
  if (s == "L2" || s == "l2") return Regularization::L2;
  throw InvalidInput("unknown regularization '" + std::string(s) + "'");
}

struct SolverOptions {
  double tolerance = 1e-7;  // max absolute coefficient change per sweep
  int max_sweeps = 10000;
  std::function<void(int sweep, double objective)> on_sweep;  // L1 only
};

struct LinearSolution {
  Eigen::VectorXd beta;
  double intercept = 0.0;
  int sweeps = 0;
  bool converged = true;
};

/// (1/2n)|y - X b - b0|^2 + penalty, penalty = s|b|_1 or s|b|_2^2.
inline double penalized_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                                  double intercept, Regularization reg, double strength) {
  const Eigen::VectorXd r = y - x * beta - Eigen::VectorXd::Constant(y.size(), intercept);
  const double loss = r.squaredNorm() / (2.0 * static_cast<double>(y.size()));
  return loss + strength * (reg == Regularization::L1 ? beta.lpNorm<1>() : beta.squaredNorm());
}

/// Gradient of the smooth part with respect to b: -X'(y - X b - b0)/n.
inline Eigen::VectorXd loss_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                                     double intercept) {
  const Eigen::VectorXd r = y - x * beta - Eigen::VectorXd::Constant(y.size(), intercept);
  return -(x.transpose() * r) / static_cast<double>(y.size());
}

namespace impl {

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Cyclic coordinate descent on centered data. Keeps the residual current
// and alternates sweeps over the active set with full sweeps.
inline LinearSolution lasso_cd(const Eigen::MatrixXd& xc, const Eigen::VectorXd& yc, double strength,
                               const SolverOptions& opt) {
  const Eigen::Index n = xc.rows(), p = xc.cols();
  const double dn = static_cast<double>(n);
  LinearSolution s;
  s.beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = yc;
  std::vector<double> sq(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) sq[static_cast<std::size_t>(j)] = xc.col(j).squaredNorm() / dn;

  auto sweep = [&](bool active_only) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double a = sq[static_cast<std::size_t>(j)];
      if (a <= 0.0) continue;
      const double old = s.beta[j];
      if (active_only && old == 0.0) continue;
      const double rho = xc.col(j).dot(r) / dn + a * old;
      const double nb = soft_threshold(rho, strength) / a;
      if (nb != old) {
        r.noalias() -= (nb - old) * xc.col(j);
        s.beta[j] = nb;
        max_change = std::max(max_change, std::abs(nb - old));
      }
    }
    ++s.sweeps;
    if (opt.on_sweep) opt.on_sweep(s.sweeps, r.squaredNorm() / (2.0 * dn) + strength * s.beta.lpNorm<1>());
    return max_change;
  };

  s.converged = false;
  while (s.sweeps < opt.max_sweeps) {
    if (sweep(false) < opt.tolerance) {
      s.converged = true;
      break;
    }
    while (s.sweeps < opt.max_sweeps && sweep(true) >= opt.tolerance) {
    }
  }
  return s;
}

}  // namespace impl

/// Penalized least squares with an unpenalized intercept. Strength 0 gives
/// the minimum-norm least-squares solution for either penalty.
inline LinearSolution solve_penalized(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Regularization reg,
                                      double strength, const SolverOptions& opt = {}) {
  detail::require(x.rows() == y.size(), "design rows and targets differ in length");
  detail::require(x.rows() >= 2, "need at least two samples");
  if (!(strength >= 0.0) || !std::isfinite(strength)) throw InvalidInput("regularization strength must be >= 0");
  if (!y.allFinite()) throw InvalidInput("targets must be finite");
  const double dn = static_cast<double>(x.rows());
  const Eigen::RowVectorXd xm = x.colwise().mean();
  const double ym = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - xm;
  const Eigen::VectorXd yc = y.array() - ym;

  LinearSolution s;
  if (strength == 0.0) {
    s.beta = xc.completeOrthogonalDecomposition().solve(yc);
  } else if (reg == Regularization::L1) {
    s = impl::lasso_cd(xc, yc, strength, opt);
  } else if (x.cols() <= x.rows()) {
    Eigen::MatrixXd a = xc.transpose() * xc / dn;
    a.diagonal().array() += 2.0 * strength;
    s.beta = a.ldlt().solve(xc.transpose() * yc / dn);
  } else {
    // Dual form: b = X'(XX' + 2 n s I)^-1 y.
    Eigen::MatrixXd k = xc * xc.transpose();
    k.diagonal().array() += 2.0 * dn * strength;
    s.beta = xc.transpose() * k.ldlt().solve(yc);
  }
  s.intercept = ym - xm.dot(s.beta);
  return s;
}

/// Smallest L1 strength at which every coefficient is zero.
inline double lasso_max_strength(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  // Same per-column reduction as the solver, so strength == max gives exact zeros.
  double m = 0.0;
  for (Eigen::Index j = 0; j < xc.cols(); ++j)
    m = std::max(m, std::abs(xc.col(j).dot(yc) / static_cast<double>(x.rows())));
  return m;
}

}  // namespace dnayield
