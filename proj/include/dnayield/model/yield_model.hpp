#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dnayield/core/error.hpp"
#include "dnayield/core/hash.hpp"
#include "dnayield/core/quantile.hpp"
#include "dnayield/core/text.hpp"
#include "dnayield/model/conditioning.hpp"
#include "dnayield/model/penalized.hpp"
#include "dnayield/model/transform.hpp"

namespace dnayield {

struct ExtractionEvent {
  int attempt_index = 1;
  double dna_yield = 0.0;  // ng
  int n_slides = 1;
};

/// ng per slide from the first one or two extraction attempts.
inline double ground_truth_label(std::span<const ExtractionEvent> events) {
  if (events.empty()) throw InvalidInput("no extraction events");
  std::vector<ExtractionEvent> ev(events.begin(), events.end());
  std::stable_sort(ev.begin(), ev.end(),
                   [](const auto& a, const auto& b) { return a.attempt_index < b.attempt_index; });
  const std::size_t k = std::min<std::size_t>(2, ev.size());
  double mass = 0.0, slides = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (ev[i].n_slides < 1) throw InvalidInput("no recorded scraping: attempt " + std::to_string(ev[i].attempt_index) + " has zero slides");
    if (!(ev[i].dna_yield >= 0.0) || !std::isfinite(ev[i].dna_yield)) throw InvalidInput("DNA yield must be a finite non-negative mass");
    mass += ev[i].dna_yield;
    slides += ev[i].n_slides;
  }
  return mass / slides;
}

struct YieldModel {
  TransformKind kind = TransformKind::natural_log;
  double target_lambda = 0.0;          // box_cox only
  std::vector<double> feature_lambda;  // box_cox only, one per feature
  ConditioningSpec conditioning;
  std::vector<double> coefficients;
  double intercept = 0.0;
  Regularization regularization = Regularization::L1;
  double strength = 0.0;
  std::string feature_names_hash;  // empty when trained on anonymous columns
  std::string version;

  std::size_t feature_count() const { return coefficients.size(); }

  TransformSpec target_transform() const { return {kind, kind == TransformKind::box_cox ? target_lambda : 0.0}; }
  TransformSpec feature_transform(std::size_t j) const {
    return {kind, kind == TransformKind::box_cox ? feature_lambda[j] : 0.0};
  }

  /// Conditioned and power-transformed design row.
  std::vector<double> design_row(std::span<const double> raw) const {
    auto z = prepare_features(raw, conditioning);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = forward(z[j], feature_transform(j));
    return z;
  }

  double predict_transformed(std::span<const double> raw) const {
    const auto z = design_row(raw);
    double t = intercept;
    for (std::size_t j = 0; j < z.size(); ++j) t += coefficients[j] * z[j];
    return t;
  }

  /// Predicted ng per slide; always finite and strictly positive.
  double predict(std::span<const double> raw) const { return to_yield(predict_transformed(raw)); }

  double to_yield(double t) const {
    constexpr double lo = std::numeric_limits<double>::min(), hi = std::numeric_limits<double>::max();
    if (std::isnan(t)) return lo;
    double v;
    if (kind == TransformKind::natural_log) {
      v = std::exp(std::clamp(t, -700.0, 700.0));
    } else {
      const double base = 1.0 + target_lambda * t;
      v = base > 0.0 ? box_cox_inverse(t, target_lambda) : lo;
    }
    if (std::isnan(v)) return lo;
    return std::clamp(v, lo, hi);
  }
};

struct FitReport {
  std::size_t samples_in = 0;
  std::size_t samples_used = 0;
  std::size_t zero_targets_excluded = 0;
  int sweeps = 0;
  bool converged = true;
  double r_train = 0.0;  // Pearson R in transformed space
};

struct FitResult {
  YieldModel model;
  FitReport report;
};

namespace impl {

inline std::string format_vec(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += text::format_double(v[i]);
  }
  return s;
}

inline std::string model_body(const YieldModel& m) {
  std::string b = "dnayield-model 1\n";
  b += "transform " + std::string(to_string(m.kind)) + "\n";
  b += "target_lambda " + text::format_double(m.target_lambda) + "\n";
  b += "regularization " + std::string(to_string(m.regularization)) + "\n";
  b += "strength " + text::format_double(m.strength) + "\n";
  b += "features " + std::to_string(m.feature_count()) + "\n";
  b += "feature_names_sha256 " + (m.feature_names_hash.empty() ? std::string("-") : m.feature_names_hash) + "\n";
  b += "intercept " + text::format_double(m.intercept) + "\n";
  b += "p05 " + format_vec(m.conditioning.p05) + "\n";
  b += "p995 " + format_vec(m.conditioning.p995) + "\n";
  b += "range " + format_vec(m.conditioning.range) + "\n";
  b += "feature_lambda " + format_vec(m.feature_lambda) + "\n";
  b += "coefficients " + format_vec(m.coefficients) + "\n";
  return b;
}

}  // namespace impl

inline std::string names_hash(const std::vector<std::string>& names) {
  Sha256 h;
  for (const auto& n : names) h.update(n).update("\n");
  return h.hex();
}

/// Plain-text artifact with a trailing content hash. Values are written in
/// shortest round-trip form so a reloaded model predicts bit-identically.
inline std::string serialize_model(const YieldModel& m) {
  const auto body = impl::model_body(m);
  return body + "content_sha256 " + sha256_hex(body) + "\n";
}

inline std::string model_version_of(const YieldModel& m) { return sha256_hex(impl::model_body(m)).substr(0, 16); }

inline YieldModel deserialize_model(const std::string& text_in) {
  const auto marker = text_in.rfind("content_sha256 ");
  if (marker == std::string::npos) throw InvalidInput("model artifact has no content hash");
  const auto body = text_in.substr(0, marker);
  const auto stated = std::string(text::trim(text_in.substr(marker + 15)));
  if (sha256_hex(body) != stated) throw InvalidInput("model artifact content hash mismatch");

  std::istringstream in(body);
  std::string line;
  std::map<std::string, std::string> fields;
  while (std::getline(in, line)) {
    const auto sp = line.find(' ');
    fields[line.substr(0, sp)] = sp == std::string::npos ? "" : line.substr(sp + 1);
  }
  auto need = [&](const char* k) -> const std::string& {
    const auto it = fields.find(k);
    if (it == fields.end()) throw InvalidInput(std::string("model artifact missing '") + k + "'");
    return it->second;
  };
  auto vec = [&](const char* k) {
    std::vector<double> v;
    for (const auto& t : text::split(need(k), ' '))
      if (!t.empty()) v.push_back(text::to_double(t, k));
    return v;
  };
  if (need("dnayield-model") != "1") throw InvalidInput("unsupported model artifact version");
  YieldModel m;
  m.kind = parse_transform_kind(need("transform"));
  m.target_lambda = text::to_double(need("target_lambda"), "target_lambda");
  m.regularization = parse_regularization(need("regularization"));
  m.strength = text::to_double(need("strength"), "strength");
  m.feature_names_hash = need("feature_names_sha256") == "-" ? "" : need("feature_names_sha256");
  m.intercept = text::to_double(need("intercept"), "intercept");
  m.conditioning.p05 = vec("p05");
  m.conditioning.p995 = vec("p995");
  m.conditioning.range = vec("range");
  m.feature_lambda = vec("feature_lambda");
  m.coefficients = vec("coefficients");
  const auto p = static_cast<std::size_t>(text::to_int(need("features"), "features"));
  if (m.coefficients.size() != p || m.conditioning.p05.size() != p || m.conditioning.p995.size() != p ||
      m.conditioning.range.size() != p || (m.kind == TransformKind::box_cox && m.feature_lambda.size() != p))
    throw InvalidInput("model artifact arrays disagree with the feature count");
  m.version = stated.substr(0, 16);
  return m;
}

/// Fits the full chain: zero-target exclusion, conditioning, power
/// transforms (lambdas fit here, on this data only), penalized solve.
inline FitResult fit_yield_model(const Eigen::MatrixXd& raw, std::span<const double> targets, TransformKind kind,
                                 Regularization reg, double strength, const SolverOptions& opt = {},
                                 const std::vector<std::string>* feature_names = nullptr) {
  detail::require(static_cast<std::size_t>(raw.rows()) == targets.size(), "feature rows and targets differ in length");
  if (!(strength >= 0.0)) throw InvalidInput("regularization strength must be >= 0");
  FitResult res;
  auto& rep = res.report;
  rep.samples_in = targets.size();
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!std::isfinite(targets[i])) throw InvalidInput("target " + std::to_string(i) + " is not finite");
    if (targets[i] < 0.0) throw InvalidInput("target " + std::to_string(i) + " is negative");
    if (targets[i] == 0.0)
      ++rep.zero_targets_excluded;
    else
      keep.push_back(static_cast<Eigen::Index>(i));
  }
  if (keep.size() < 2) throw InvalidInput("fewer than two usable training targets");
  rep.samples_used = keep.size();
  const Eigen::MatrixXd x_raw = raw(keep, Eigen::all);
  std::vector<double> y_raw;
  for (auto i : keep) y_raw.push_back(targets[static_cast<std::size_t>(i)]);

  YieldModel& m = res.model;
  m.kind = kind;
  m.regularization = reg;
  m.strength = strength;
  if (feature_names) m.feature_names_hash = names_hash(*feature_names);
  m.conditioning = fit_conditioning(x_raw);
  Eigen::MatrixXd z = prepare_features(x_raw, m.conditioning);
  if (kind == TransformKind::box_cox) {
    m.target_lambda = fit_box_cox_lambda(y_raw);
    m.feature_lambda.resize(static_cast<std::size_t>(z.cols()));
    std::vector<double> col(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      for (Eigen::Index i = 0; i < z.rows(); ++i) col[static_cast<std::size_t>(i)] = z(i, j);
      m.feature_lambda[static_cast<std::size_t>(j)] = fit_box_cox_lambda(col);
    }
  }
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const auto t = m.feature_transform(static_cast<std::size_t>(j));
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = forward(z(i, j), t);
  }
  const auto ty = forward(y_raw, m.target_transform());
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ty.data(), static_cast<Eigen::Index>(ty.size()));
  const auto sol = solve_penalized(z, y, reg, strength, opt);
  m.coefficients.assign(sol.beta.data(), sol.beta.data() + sol.beta.size());
  m.intercept = sol.intercept;
  m.version = model_version_of(m);
  rep.sweeps = sol.sweeps;
  rep.converged = sol.converged;
  const Eigen::VectorXd fitted = z * sol.beta + Eigen::VectorXd::Constant(y.size(), sol.intercept);
  rep.r_train = pearson_r(std::span<const double>(fitted.data(), static_cast<std::size_t>(fitted.size())), ty);
  return res;
}

}  // namespace dnayield
