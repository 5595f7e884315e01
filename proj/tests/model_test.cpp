#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dnayield/core/random.hpp"
#include "dnayield/model/sweep.hpp"

using namespace dnayield;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int n, int p) {
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
  return x;
}

// Checks the lasso KKT system: |g_j| <= s when b_j = 0, g_j = -s sign(b_j) otherwise.
double kkt_violation(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LinearSolution& sol, double s) {
  const Eigen::VectorXd g = loss_gradient(x, y, sol.beta, sol.intercept);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (sol.beta[j] == 0.0)
      worst = std::max(worst, std::abs(g[j]) - s);
    else
      worst = std::max(worst, std::abs(g[j] + s * (sol.beta[j] > 0 ? 1.0 : -1.0)));
  }
  return worst;
}

}  // namespace

// ---- labels and transforms -------------------------------------------------

TEST(GroundTruth, Examples) {
  const std::vector<ExtractionEvent> one = {{1, 500, 5}};
  EXPECT_DOUBLE_EQ(ground_truth_label(one), 100.0);
  const std::vector<ExtractionEvent> two = {{1, 300, 5}, {2, 200, 5}};
  EXPECT_DOUBLE_EQ(ground_truth_label(two), 50.0);
  const std::vector<ExtractionEvent> three = {{1, 300, 5}, {2, 200, 5}, {3, 999, 9}};
  EXPECT_DOUBLE_EQ(ground_truth_label(three), 50.0);
  const std::vector<ExtractionEvent> shuffled = {{3, 999, 9}, {2, 200, 5}, {1, 300, 5}};
  EXPECT_DOUBLE_EQ(ground_truth_label(shuffled), 50.0);
  const std::vector<ExtractionEvent> none = {{1, 300, 0}};
  EXPECT_THROW(ground_truth_label(none), InvalidInput);
  EXPECT_THROW(ground_truth_label(std::vector<ExtractionEvent>{}), InvalidInput);
}

TEST(Transform, Identities) {
  const TransformSpec bc1{TransformKind::box_cox, 1.0};
  for (double x : {0.5, 1.0, 7.25}) EXPECT_DOUBLE_EQ(forward(x, bc1), x - 1);
  const TransformSpec bc0{TransformKind::box_cox, 0.0}, ln{TransformKind::natural_log, 0.0};
  const TransformSpec tiny{TransformKind::box_cox, 1e-9};
  for (double x : {1e-3, 0.2, 3.0, 450.0}) {
    EXPECT_EQ(forward(x, bc0), forward(x, ln));
    // first-order term of the expansion in lambda is lambda ln(x)^2 / 2
    EXPECT_NEAR(forward(x, tiny), std::log(x), 1e-9 * std::log(x) * std::log(x) + 1e-12);
  }
  EXPECT_THROW(forward(0.0, ln), InvalidInput);
  EXPECT_THROW(forward(-1.0, bc1), InvalidInput);
}

TEST(Transform, RoundTrip) {
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const double x = std::exp(rng.uniform(-6, 6));
    const TransformSpec t{rep % 2 ? TransformKind::natural_log : TransformKind::box_cox, rng.uniform(-2, 2)};
    EXPECT_NEAR(inverse(forward(x, t), t), x, 1e-10 * std::max(1.0, x));
  }
}

TEST(Transform, LambdaFitMatchesGridOracle) {
  Rng rng(8);
  std::vector<double> x;
  for (int i = 0; i < 400; ++i) x.push_back(box_cox_inverse(rng.normal(2, 0.8), 0.5));
  const double lam = fit_box_cox_lambda(x);
  // Oracle: brute-force profile likelihood written with pow.
  double best = 0, best_l = -INFINITY;
  for (int k = -200; k <= 200; ++k) {
    const double l = k / 100.0;
    double s = 0, sl = 0;
    std::vector<double> y;
    for (double v : x) {
      y.push_back(l == 0 ? std::log(v) : (std::pow(v, l) - 1) / l);
      s += y.back();
      sl += std::log(v);
    }
    const double m = s / x.size();
    double var = 0;
    for (double v : y) var += (v - m) * (v - m) / x.size();
    const double llf = -0.5 * x.size() * std::log(var) + (l - 1) * sl;
    if (llf > best_l) {
      best_l = llf;
      best = l;
    }
  }
  EXPECT_DOUBLE_EQ(lam, best);
  EXPECT_NEAR(lam, 0.5, 0.2);
  EXPECT_EQ(fit_box_cox_lambda(std::vector<double>(10, 2.0)), 1.0);
}

// ---- conditioning ------------------------------------------------------------

TEST(Conditioning, ConstantFeature) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(20, 3, 7.5);
  const auto c = fit_conditioning(x);
  EXPECT_EQ(c.p05[1], 7.5);
  EXPECT_EQ(c.p995[1], 7.5);
  std::vector<double> raw = {7.5, 100.0, -3.0};
  for (double v : prepare_features(raw, c)) EXPECT_DOUBLE_EQ(v, 1e-3);
}

TEST(Conditioning, UniformPercentiles) {
  Rng rng(12);
  Eigen::MatrixXd x(20000, 1);
  for (int i = 0; i < x.rows(); ++i) x(i, 0) = rng.uniform();
  const auto c = fit_conditioning(x);
  EXPECT_NEAR(c.p05[0], 0.005, 0.002);
  EXPECT_NEAR(c.p995[0], 0.995, 0.002);
}

TEST(Conditioning, TotalOnAdversarialInput) {
  Rng rng(4);
  Eigen::MatrixXd x(50, 6);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 6; ++j) x(i, j) = rng.normal(j * 10.0 - 20.0, 1 + j);
  const auto c = fit_conditioning(x);
  const double inf = std::numeric_limits<double>::infinity(), nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> bad = {nan, inf, -inf, 1e308, -1e308, 0.0};
  const auto z = prepare_features(bad, c);
  for (double v : z) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 1e-3);
    EXPECT_LE(v, 1.0 + 1e-3 + 1e-12);
  }
  EXPECT_DOUBLE_EQ(z[3], 1.0 + 1e-3);  // above p995 clamps to the top
  EXPECT_DOUBLE_EQ(z[4], 1e-3);        // below p05 clamps to the bottom
}

TEST(Conditioning, NaNFollowsZero) {
  Eigen::MatrixXd x(5, 1);
  x << 1, 2, 3, 4, 5;
  const auto c = fit_conditioning(x);
  std::vector<double> a = {std::numeric_limits<double>::quiet_NaN()}, b = {0.0};
  EXPECT_EQ(prepare_features(a, c), prepare_features(b, c));
  EXPECT_DOUBLE_EQ(prepare_features(a, c)[0], 1e-3);
}

// ---- solver ------------------------------------------------------------------

TEST(Solver, ExactLineUnregularized) {
  Eigen::MatrixXd x(6, 1);
  x << 0, 1, 2, 3, 4, 5;
  const Eigen::VectorXd y = 2 * x.col(0).array() + 1;
  for (auto reg : {Regularization::L1, Regularization::L2}) {
    const auto s = solve_penalized(x, y, reg, 0.0);
    EXPECT_NEAR(s.beta[0], 2.0, 1e-8);
    EXPECT_NEAR(s.intercept, 1.0, 1e-8);
  }
}

TEST(Solver, LassoShutoff) {
  Rng rng(1);
  const auto x = random_matrix(rng, 40, 8);
  Eigen::VectorXd y = x.col(2) * 1.5 + Eigen::VectorXd::Constant(40, 4.0);
  for (int i = 0; i < 40; ++i) y[i] += rng.normal(0, 0.3);
  const double smax = lasso_max_strength(x, y);
  const auto s = solve_penalized(x, y, Regularization::L1, smax);
  EXPECT_EQ(s.beta.lpNorm<1>(), 0.0);
  EXPECT_NEAR(s.intercept, y.mean(), 1e-12);
  const auto s2 = solve_penalized(x, y, Regularization::L1, smax * 0.99);
  EXPECT_GT(s2.beta.lpNorm<1>(), 0.0);
}

TEST(Solver, LassoStationarityOnRandomProblems) {
  Rng rng(100);
  for (int rep = 0; rep < 100; ++rep) {
    const auto x = random_matrix(rng, 50, 20);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) y[i] = x(i, rep % 20) * 2 - x(i, (rep + 3) % 20) + rng.normal();
    const double s = lasso_max_strength(x, y) * rng.uniform(0.01, 0.9);
    const auto sol = solve_penalized(x, y, Regularization::L1, s);
    ASSERT_TRUE(sol.converged);
    EXPECT_LE(kkt_violation(x, y, sol, s), 1e-6) << "problem " << rep;
  }
}

TEST(Solver, LassoPathMonotone) {
  Rng rng(6);
  const auto x = random_matrix(rng, 60, 25);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) y[i] = x.row(i).head(6).sum() + rng.normal(0, 0.5);
  const double smax = lasso_max_strength(x, y);
  long prev = 1000;
  for (double f : {0.001, 0.01, 0.05, 0.1, 0.2, 0.4, 0.8, 1.0}) {
    const auto sol = solve_penalized(x, y, Regularization::L1, f * smax);
    const long nz = (sol.beta.array() != 0.0).count();
    EXPECT_LE(nz, prev) << f;
    prev = nz;
  }
}

TEST(Solver, LassoObjectiveNeverIncreases) {
  Rng rng(15);
  const auto x = random_matrix(rng, 30, 60);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) y[i] = x(i, 0) - 2 * x(i, 1) + rng.normal(0, 0.2);
  std::vector<double> trace;
  SolverOptions opt;
  opt.on_sweep = [&](int, double obj) { trace.push_back(obj); };
  const double s = 0.05;
  const auto sol = solve_penalized(x, y, Regularization::L1, s, opt);
  ASSERT_GT(trace.size(), 2u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12);
  // The traced objective on centered data equals the full objective at the solution.
  EXPECT_NEAR(trace.back(), penalized_objective(x, y, sol.beta, sol.intercept, Regularization::L1, s), 1e-10);
}

TEST(Solver, RidgePrimalAndDualMatchNormalEquations) {
  Rng rng(21);
  for (auto [n, p] : {std::pair{40, 10}, std::pair{15, 50}}) {
    const auto x = random_matrix(rng, n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = x(i, 0) + rng.normal();
    const double s = 0.3;
    const auto sol = solve_penalized(x, y, Regularization::L2, s);
    // Oracle: augmented system with an explicit intercept column, unpenalized.
    Eigen::MatrixXd a(n, p + 1);
    a << Eigen::VectorXd::Ones(n), x;
    Eigen::MatrixXd pen = Eigen::MatrixXd::Zero(p + 1, p + 1);
    pen.diagonal().tail(p).setConstant(2.0 * s * n);
    const Eigen::VectorXd theta = (a.transpose() * a + pen).fullPivLu().solve(a.transpose() * y);
    EXPECT_NEAR(sol.intercept, theta[0], 1e-9);
    for (int j = 0; j < p; ++j) EXPECT_NEAR(sol.beta[j], theta[j + 1], 1e-9);
    // Gradient of the full objective vanishes.
    const Eigen::VectorXd g = loss_gradient(x, y, sol.beta, sol.intercept) + 2 * s * sol.beta;
    EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Solver, MinimumNormInterpolatesWhenWide) {
  Rng rng(5);
  const auto x = random_matrix(rng, 12, 40);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) y[i] = rng.normal();
  const auto sol = solve_penalized(x, y, Regularization::L1, 0.0);
  const Eigen::VectorXd fit = x * sol.beta + Eigen::VectorXd::Constant(12, sol.intercept);
  EXPECT_LT((fit - y).cwiseAbs().maxCoeff(), 1e-9);
  // Minimum norm: beta lies in the row space of the centered design.
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::VectorXd proj = xc.transpose() * xc.transpose().colPivHouseholderQr().solve(sol.beta);
  EXPECT_LT((proj - sol.beta).norm(), 1e-9);
}

TEST(Solver, RejectsBadArguments) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(3);
  EXPECT_THROW(solve_penalized(x, y, Regularization::L1, -1.0), InvalidInput);
  y[1] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(solve_penalized(x, y, Regularization::L1, 0.1), InvalidInput);
}

// ---- model ---------------------------------------------------------------------

namespace {

// Raw features whose conditioned logs drive the target exactly.
Dataset noiseless(Rng& rng, int n, int p) {
  Dataset d;
  d.x = Eigen::MatrixXd(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) d.x(i, j) = rng.uniform(0, 100);
  const auto c = fit_conditioning(d.x);
  const auto z = prepare_features(d.x, c);
  for (int i = 0; i < n; ++i) {
    double t = 0.3;
    for (int j = 0; j < p; ++j) t += (j % 3 - 1) * 0.4 * std::log(z(i, j));
    d.y.push_back(std::exp(t));
  }
  return d;
}

}  // namespace

TEST(YieldModel, ConstantModelPredictsIntercept) {
  YieldModel m;
  m.conditioning.p05 = {0, 0};
  m.conditioning.p995 = {1, 1};
  m.conditioning.range = {1, 1};
  m.coefficients = {0, 0};
  m.intercept = std::log(100.0);
  EXPECT_NEAR(m.predict(std::vector<double>{0.3, 0.9}), 100.0, 1e-12);
  EXPECT_NEAR(m.predict(std::vector<double>{-1e9, NAN}), 100.0, 1e-12);
  EXPECT_THROW(m.predict(std::vector<double>{1.0}), InvalidInput);
}

TEST(YieldModel, NoiselessClosedLoop) {
  Rng rng(44);
  const auto d = noiseless(rng, 60, 8);
  const auto fit = fit_config(d, {TransformKind::natural_log, Regularization::L2, 0.0});
  EXPECT_NEAR(fit.report.r_train, 1.0, 1e-12);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Eigen::VectorXd row = d.x.row(static_cast<Eigen::Index>(i));
    EXPECT_NEAR(fit.model.predict(std::span<const double>(row.data(), 8)), d.y[i], 1e-6 * d.y[i]);
  }
}

TEST(YieldModel, ZeroTargetsExcludedAndReported) {
  Rng rng(45);
  auto d = noiseless(rng, 30, 3);
  d.y[4] = 0.0;
  d.y[9] = 0.0;
  const auto fit = fit_config(d, {TransformKind::natural_log, Regularization::L1, 0.001});
  EXPECT_EQ(fit.report.zero_targets_excluded, 2u);
  EXPECT_EQ(fit.report.samples_used, 28u);
  d.y[1] = NAN;
  EXPECT_THROW(fit_config(d, {}), InvalidInput);
  d.y[1] = 1.0;
  EXPECT_THROW(fit_config(d, {TransformKind::natural_log, Regularization::L1, -0.1}), InvalidInput);
}

TEST(YieldModel, PredictionsPositiveOnAdversarialInput) {
  Rng rng(46);
  auto d = noiseless(rng, 40, 5);
  for (auto kind : {TransformKind::natural_log, TransformKind::box_cox}) {
    auto fit = fit_config(d, {kind, Regularization::L2, 0.0});
    fit.model.intercept = 1e6;  // push the linear predictor far out
    for (double v : std::initializer_list<double>{-1e308, 1e308, NAN, INFINITY, -INFINITY, 0.0}) {
      const std::vector<double> row(5, v);
      for (double icpt : {1e6, -1e6, 0.0}) {
        fit.model.intercept = icpt;
        const double pr = fit.model.predict(row);
        EXPECT_TRUE(std::isfinite(pr));
        EXPECT_GT(pr, 0.0);
      }
    }
  }
}

TEST(YieldModel, SerializationRoundTripIsBitwise) {
  Rng rng(47);
  auto d = noiseless(rng, 50, 6);
  for (int i = 0; i < 50; ++i) d.y[static_cast<std::size_t>(i)] *= std::exp(rng.normal(0, 0.2));
  for (auto kind : {TransformKind::natural_log, TransformKind::box_cox}) {
    const auto m = fit_config(d, {kind, Regularization::L1, 0.001}).model;
    const auto text = serialize_model(m);
    const auto back = deserialize_model(text);
    EXPECT_EQ(back.version, m.version);
    EXPECT_EQ(serialize_model(back), text);
    for (int i = 0; i < 50; ++i) {
      const Eigen::VectorXd row = d.x.row(i);
      const std::span<const double> r(row.data(), 6);
      EXPECT_EQ(back.predict(r), m.predict(r));
    }
    auto tampered = text;
    tampered[tampered.find("intercept ") + 10] ^= 1;
    EXPECT_THROW(deserialize_model(tampered), InvalidInput);
  }
}

TEST(YieldModel, BoxCoxLambdaFitOnTrainOnly) {
  Rng rng(48);
  auto d = noiseless(rng, 50, 4);
  const auto a = fit_config(d, {TransformKind::box_cox, Regularization::L2, 1.0}).model;
  EXPECT_DOUBLE_EQ(a.target_lambda, fit_box_cox_lambda(d.y));
  ASSERT_EQ(a.feature_lambda.size(), 4u);
}

// ---- sweep and importance ------------------------------------------------------

TEST(Sweep, GridMatchesPublishedRows) {
  const auto g = default_sweep_grid();
  ASSERT_EQ(g.size(), 16u);
  const double l1[] = {0.001, 0.01, 0.1, 1}, l2[] = {1, 10, 1000, 10000};
  for (int t = 0; t < 2; ++t)
    for (int k = 0; k < 4; ++k) {
      EXPECT_EQ(g[t * 8 + k].regularization, Regularization::L1);
      EXPECT_EQ(g[t * 8 + k].strength, l1[k]);
      EXPECT_EQ(g[t * 8 + 4 + k].regularization, Regularization::L2);
      EXPECT_EQ(g[t * 8 + 4 + k].strength, l2[k]);
      EXPECT_EQ(g[t * 8 + k].transform, t == 0 ? TransformKind::natural_log : TransformKind::box_cox);
    }
}

TEST(Sweep, NoiselessReachesPerfectTrainR) {
  Rng rng(49);
  const auto train = noiseless(rng, 80, 6), val = noiseless(rng, 40, 6);
  const auto res = sweep_parameters(train, val, {{TransformKind::natural_log, Regularization::L2, 1e-9},
                                                 {TransformKind::natural_log, Regularization::L1, 1e-7},
                                                 {TransformKind::natural_log, Regularization::L2, 10000}});
  EXPECT_GT(res.rows[0].r_train, 1 - 1e-9);
  EXPECT_GT(res.rows[1].r_train, 1 - 1e-6);
  EXPECT_LT(res.rows[2].r_val, res.rows[0].r_val);
  EXPECT_NE(res.best, 2u);
}

TEST(Sweep, PearsonAffineInvariant) {
  Rng rng(50);
  std::vector<double> a, b, c;
  for (int i = 0; i < 30; ++i) {
    a.push_back(rng.normal());
    b.push_back(a.back() + rng.normal());
    c.push_back(-0.5 + 3 * a.back());
  }
  EXPECT_NEAR(pearson_r(a, b), pearson_r(c, b), 1e-12);
}

TEST(Importance, DeterministicFoldsAndPlantedSignal) {
  Rng rng(51);
  Dataset d;
  const int n = 120, p = 30;
  d.x = Eigen::MatrixXd(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) d.x(i, j) = rng.uniform(1, 50);
    d.y.push_back(0.5 * d.x(i, 7) * std::exp(rng.normal(0, 0.05)));
  }
  for (int j = 0; j < p; ++j) d.feature_names.push_back("f" + std::to_string(j));
  const ModelConfig cfg{TransformKind::natural_log, Regularization::L1, 0.01};
  const auto a = cross_validate_importance(d, 10, cfg, 99, 0.8, {}, 3);
  const auto b = cross_validate_importance(d, 10, cfg, 99, 0.8, {}, 1);
  EXPECT_EQ(a.fold_train_rows, b.fold_train_rows);
  ASSERT_EQ(a.fold_train_rows[0].size(), 96u);
  EXPECT_EQ(a.ranked[0].name, "f7");
  for (std::size_t k = 0; k < a.ranked.size(); ++k) {
    EXPECT_EQ(a.ranked[k].mean_abs, b.ranked[k].mean_abs);
    if (k) {
      EXPECT_GE(a.cumulative_share[k], a.cumulative_share[k - 1]);
    }
  }
  ASSERT_GT(a.nonzero, 0u);
  EXPECT_EQ(a.cumulative_share[a.nonzero - 1], 1.0);
  EXPECT_THROW(cross_validate_importance(d, 1, cfg, 1), InvalidInput);
}

TEST(Dataset, CsvRoundTrip) {
  Rng rng(52);
  auto d = noiseless(rng, 5, 3);
  d.feature_names = {"a", "b", "c"};
  d.ids = {"s1", "s2", "s3", "s4", "s5"};
  const auto back = parse_dataset_csv(format_dataset_csv(d));
  EXPECT_EQ(back.ids, d.ids);
  EXPECT_EQ(back.feature_names, d.feature_names);
  EXPECT_EQ(back.y, d.y);
  EXPECT_TRUE(back.x == d.x);
}
