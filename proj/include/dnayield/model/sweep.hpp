#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "dnayield/core/quantile.hpp"
#include "dnayield/core/random.hpp"
#include "dnayield/core/text.hpp"
#include "dnayield/model/yield_model.hpp"

namespace dnayield {

/// Feature rows plus ng/slide targets.
struct Dataset {
  std::vector<std::string> ids;
  std::vector<std::string> feature_names;
  Eigen::MatrixXd x;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset d;
    d.feature_names = feature_names;
    d.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      d.x.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(rows[k]));
      d.y.push_back(y[rows[k]]);
      if (!ids.empty()) d.ids.push_back(ids[rows[k]]);
    }
    return d;
  }
};

inline constexpr const char* kTargetColumn = "ground_truth_ng_per_slide";

/// CSV: `slide_id,<feature columns...>,ground_truth_ng_per_slide`.
inline std::string format_dataset_csv(const Dataset& d) {
  std::string out = "slide_id";
  for (const auto& n : d.feature_names) out += "," + n;
  out += std::string(",") + kTargetColumn + "\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    out += d.ids.empty() ? std::to_string(i) : d.ids[i];
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) out += "," + text::format_double(d.x(static_cast<Eigen::Index>(i), j));
    out += "," + text::format_double(d.y[i]) + "\n";
  }
  return out;
}

inline Dataset parse_dataset_csv(std::string_view body) {
  const auto t = text::parse_csv(body);
  const int c_id = t.require_column("slide_id"), c_y = t.require_column(kTargetColumn);
  Dataset d;
  std::vector<int> cols;
  for (int c = 0; c < static_cast<int>(t.header.size()); ++c)
    if (c != c_id && c != c_y) {
      cols.push_back(c);
      d.feature_names.push_back(t.header[static_cast<std::size_t>(c)]);
    }
  d.x.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    d.ids.push_back(row[static_cast<std::size_t>(c_id)]);
    d.y.push_back(text::to_double(row[static_cast<std::size_t>(c_y)], kTargetColumn));
    for (std::size_t k = 0; k < cols.size(); ++k)
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          text::to_double(row[static_cast<std::size_t>(cols[k])], d.feature_names[k]);
  }
  return d;
}

struct ModelConfig {
  TransformKind transform = TransformKind::natural_log;
  Regularization regularization = Regularization::L1;
  double strength = 0.01;
};

/// {log, Box-Cox} x (L1 {0.001, 0.01, 0.1, 1} + L2 {1, 10, 1000, 10000}).
inline std::vector<ModelConfig> default_sweep_grid() {
  std::vector<ModelConfig> g;
  for (auto t : {TransformKind::natural_log, TransformKind::box_cox}) {
    for (double s : {0.001, 0.01, 0.1, 1.0}) g.push_back({t, Regularization::L1, s});
    for (double s : {1.0, 10.0, 1000.0, 10000.0}) g.push_back({t, Regularization::L2, s});
  }
  return g;
}

inline FitResult fit_config(const Dataset& d, const ModelConfig& c, const SolverOptions& opt = {}) {
  return fit_yield_model(d.x, d.y, c.transform, c.regularization, c.strength, opt,
                         d.feature_names.empty() ? nullptr : &d.feature_names);
}

/// Pearson R between transformed predictions and transformed targets, over
/// rows with a positive target.
inline double transformed_r(const YieldModel& m, const Dataset& d) {
  std::vector<double> pred, truth;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d.y[i] > 0.0)) continue;
    const Eigen::VectorXd row = d.x.row(static_cast<Eigen::Index>(i));
    pred.push_back(m.predict_transformed(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))));
    truth.push_back(forward(d.y[i], m.target_transform()));
  }
  return pearson_r(pred, truth);
}

struct SweepRow {
  ModelConfig config;
  double r_train = 0.0;
  double r_val = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t best = 0;  // argmax r_val, first on ties
};

inline SweepResult sweep_parameters(const Dataset& train, const Dataset& val, const std::vector<ModelConfig>& grid,
                                    const SolverOptions& opt = {}) {
  detail::require(!grid.empty(), "empty parameter grid");
  SweepResult res;
  std::vector<std::future<SweepRow>> jobs;
  for (const auto& c : grid)
    jobs.push_back(std::async(std::launch::async, [&, c] {
      const auto fit = fit_config(train, c, opt);
      return SweepRow{c, transformed_r(fit.model, train), transformed_r(fit.model, val)};
    }));
  for (auto& j : jobs) res.rows.push_back(j.get());
  for (std::size_t i = 1; i < res.rows.size(); ++i)
    if (res.rows[i].r_val > res.rows[res.best].r_val) res.best = i;
  return res;
}

inline std::string format_sweep_csv(const SweepResult& s) {
  std::string out = "transform,regularization,strength,r_train,r_val,best\n";
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const auto& r = s.rows[i];
    out += std::string(to_string(r.config.transform)) + "," + to_string(r.config.regularization) + "," +
           text::format_double(r.config.strength) + "," + text::format_double(r.r_train) + "," +
           text::format_double(r.r_val) + "," + (i == s.best ? "1" : "0") + "\n";
  }
  return out;
}

struct FeatureImportance {
  std::size_t index = 0;
  std::string name;
  double mean_abs = 0.0;
  double std_abs = 0.0;
};

struct ImportanceResult {
  std::vector<FeatureImportance> ranked;  // descending mean |coef|
  std::vector<double> cumulative_share;   // share of total mean |coef| in the top k+1
  std::size_t nonzero = 0;
  std::vector<std::vector<std::size_t>> fold_train_rows;
};

/// Repeated random train/validation splits; |coefficients| summarized per feature.
inline ImportanceResult cross_validate_importance(const Dataset& d, int folds, const ModelConfig& c, std::uint64_t seed,
                                                  double train_fraction = 0.8, const SolverOptions& opt = {},
                                                  unsigned threads = 0) {
  detail::require(folds >= 2, "cross-validation needs at least two folds");
  detail::require(train_fraction > 0.0 && train_fraction < 1.0, "train fraction must be in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(d.size())));
  ImportanceResult res;
  Rng rng(seed);
  for (int f = 0; f < folds; ++f) {
    auto perm = rng.permutation(d.size());
    perm.resize(n_train);
    std::sort(perm.begin(), perm.end());
    res.fold_train_rows.push_back(std::move(perm));
  }
  const auto p = static_cast<std::size_t>(d.x.cols());
  std::vector<std::vector<double>> coefs(static_cast<std::size_t>(folds));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<int> next{0};
  std::vector<std::future<void>> workers;
  for (unsigned t = 0; t < threads; ++t)
    workers.push_back(std::async(std::launch::async, [&] {
      for (int f; (f = next.fetch_add(1)) < folds;) {
        const auto sub = d.subset(res.fold_train_rows[static_cast<std::size_t>(f)]);
        coefs[static_cast<std::size_t>(f)] = fit_config(sub, c, opt).model.coefficients;
      }
    }));
  for (auto& w : workers) w.get();

  res.ranked.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    double s = 0, ss = 0;
    for (const auto& cf : coefs) {
      const double a = std::abs(cf[j]);
      s += a;
      ss += a * a;
    }
    const double mean = s / folds;
    auto& r = res.ranked[j];
    r.index = j;
    r.name = j < d.feature_names.size() ? d.feature_names[j] : std::to_string(j);
    r.mean_abs = mean;
    r.std_abs = folds > 1 ? std::sqrt(std::max(0.0, (ss - folds * mean * mean) / (folds - 1))) : 0.0;
  }
  std::stable_sort(res.ranked.begin(), res.ranked.end(),
                   [](const auto& a, const auto& b) { return a.mean_abs > b.mean_abs; });
  double total = 0;
  for (const auto& r : res.ranked) {
    total += r.mean_abs;
    res.nonzero += r.mean_abs > 0.0;
  }
  double run = 0;
  for (const auto& r : res.ranked) {
    run += r.mean_abs;
    res.cumulative_share.push_back(total > 0 ? std::min(1.0, run / total) : 0.0);
  }
  return res;
}

}  // namespace dnayield
