#pragma once

#include <cmath>
#include <cstdint>
#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dnayield/core/error.hpp"
#include "dnayield/features/feature_vector.hpp"
#include "dnayield/mask/morphology.hpp"
#include "dnayield/model/yield_model.hpp"

namespace dnayield {

inline const std::vector<double>& default_targets() {
  static const std::vector<double> t = {100.0, 400.0, 1000.0};
  return t;
}

/// Slides needed so that count x yield_per_slide >= target; never below 1.
inline std::int64_t slides_for_target(double yield_per_slide, double target) {
  if (!(yield_per_slide > 0.0) || !std::isfinite(yield_per_slide))
    throw InvalidInput("yield per slide must be positive and finite");
  if (!(target > 0.0) || !std::isfinite(target)) throw InvalidInput("target yield must be positive and finite");
  const double ratio = target / yield_per_slide;
  if (!(ratio < 9e15)) throw InvalidInput("target unreachable at this yield per slide");
  auto n = static_cast<std::int64_t>(std::ceil(ratio));
  // guard against the quotient rounding down across an integer
  while (static_cast<double>(n) * yield_per_slide < target) ++n;
  return std::max<std::int64_t>(1, n);
}

struct ScopeCounts {
  std::map<double, std::int64_t> by_target;
};

struct Recommendation {
  std::string slide_id;
  std::string model_version;
  std::string bundle_hash;
  std::vector<double> targets;
  double predicted_yield_ws = 0.0;
  std::optional<double> predicted_yield_macro;  // absent when no tumor was detected
  ScopeCounts whole_slide;
  std::optional<ScopeCounts> macrodissection;
  std::string macro_mask_ref;

  bool tumor_detected() const { return predicted_yield_macro.has_value(); }
};

inline ScopeCounts counts_for(double yield_per_slide, const std::vector<double>& targets) {
  ScopeCounts c;
  for (double t : targets) c.by_target[t] = slides_for_target(yield_per_slide, t);
  return c;
}

inline Recommendation recommend_from_predictions(double ws_yield, std::optional<double> macro_yield,
                                                 const std::vector<double>& targets = default_targets()) {
  detail::require(!targets.empty(), "at least one target yield is required");
  Recommendation r;
  r.targets = targets;
  r.predicted_yield_ws = ws_yield;
  r.whole_slide = counts_for(ws_yield, targets);
  if (macro_yield) {
    r.predicted_yield_macro = *macro_yield;
    r.macrodissection = counts_for(*macro_yield, targets);
  }
  return r;
}

/// Raised when one stage of recommendation building fails; `stage` names it.
class StageError : public InvalidInput {
 public:
  StageError(std::string stage, const std::string& what) : InvalidInput(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct RecommendOptions {
  std::vector<double> targets = default_targets();
  mask::MacroParams macro;
  features::FeatureOptions features;
  std::uint64_t seed = 0;
};

struct RecommendationBuild {
  Recommendation recommendation;
  mask::MacroEstimate macro;
  features::FeatureVector ws_features;
  std::optional<features::FeatureVector> macro_features;
};

/// Whole-slide and macrodissection predictions plus slide counts per target.
// Called after each stage with its name and wall time in milliseconds.
using StageHook = std::function<void(const std::string& stage, double ms)>;

inline RecommendationBuild build_recommendation(const YieldModel& model, const features::SlideInputs& in,
                                                const RecommendOptions& opt = {}, const StageHook& hook = {}) {
  RecommendationBuild b;
  auto t0 = std::chrono::steady_clock::now();
  auto lap = [&](const char* stage) {
    const auto t1 = std::chrono::steady_clock::now();
    if (hook) hook(stage, std::chrono::duration<double, std::milli>(t1 - t0).count());
    t0 = t1;
  };
  try {
    b.macro = mask::estimate_macrodissection_area(features::tumor_mask(in, opt.features), opt.macro);
  } catch (const std::exception& e) {
    throw StageError("macro_estimate", e.what());
  }
  lap("macro_estimate");
  try {
    b.ws_features = features::generate_feature_vector(in, nullptr, opt.seed, opt.features);
  } catch (const std::exception& e) {
    throw StageError("features_ws", e.what());
  }
  lap("features_ws");
  if (b.macro.tumor_detected()) {
    try {
      b.macro_features = features::generate_feature_vector(in, &*b.macro.area, opt.seed, opt.features);
    } catch (const std::exception& e) {
      throw StageError("features_macro", e.what());
    }
    lap("features_macro");
  }
  double ws = 0;
  std::optional<double> mc;
  try {
    ws = model.predict(b.ws_features.values);
    if (b.macro_features) mc = model.predict(b.macro_features->values);
  } catch (const std::exception& e) {
    throw StageError("predict", e.what());
  }
  lap("predict");
  try {
    b.recommendation = recommend_from_predictions(ws, mc, opt.targets);
  } catch (const std::exception& e) {
    throw StageError("recommend", e.what());
  }
  lap("recommend");
  b.recommendation.slide_id = in.slide_id;
  b.recommendation.model_version = model.version;
  return b;
}

namespace impl {

inline std::string target_key(double t) { return text::format_double(t); }

inline nlohmann::json counts_json(const ScopeCounts& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [t, n] : c.by_target) j[target_key(t)] = n;
  return j;
}

}  // namespace impl

/// Payload served to the review client: one row per scope, one column per target.
inline nlohmann::json recommendation_json(const Recommendation& r) {
  nlohmann::json j;
  j["slide_id"] = r.slide_id;
  j["model_version"] = r.model_version;
  j["bundle_hash"] = r.bundle_hash;
  j["targets_ng"] = r.targets;
  j["tumor_detected"] = r.tumor_detected();
  j["macro_mask_ref"] = r.macro_mask_ref;
  j["predicted_yield_ng_per_slide"] = {
      {"whole_slide", r.predicted_yield_ws},
      {"macrodissection", r.predicted_yield_macro ? nlohmann::json(*r.predicted_yield_macro) : nlohmann::json()}};
  nlohmann::json rows = nlohmann::json::array();
  rows.push_back({{"scope", "whole_slide"}, {"absent", false}, {"slides", impl::counts_json(r.whole_slide)}});
  if (r.macrodissection)
    rows.push_back({{"scope", "macrodissection"}, {"absent", false}, {"slides", impl::counts_json(*r.macrodissection)}});
  else
    rows.push_back({{"scope", "macrodissection"}, {"absent", true}, {"slides", nullptr}});
  j["rows"] = rows;
  return j;
}

inline std::string recommendation_payload(const Recommendation& r) { return recommendation_json(r).dump(2) + "\n"; }

inline Recommendation parse_recommendation(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const std::exception& e) {
    throw InvalidInput(std::string("recommendation payload is not valid JSON: ") + e.what());
  }
  try {
    Recommendation r;
    r.slide_id = j.at("slide_id").get<std::string>();
    r.model_version = j.at("model_version").get<std::string>();
    r.bundle_hash = j.at("bundle_hash").get<std::string>();
    r.targets = j.at("targets_ng").get<std::vector<double>>();
    r.macro_mask_ref = j.at("macro_mask_ref").get<std::string>();
    const auto& py = j.at("predicted_yield_ng_per_slide");
    r.predicted_yield_ws = py.at("whole_slide").get<double>();
    if (!py.at("macrodissection").is_null()) r.predicted_yield_macro = py.at("macrodissection").get<double>();
    for (const auto& row : j.at("rows")) {
      if (row.at("absent").get<bool>()) continue;
      ScopeCounts c;
      for (double t : r.targets) c.by_target[t] = row.at("slides").at(impl::target_key(t)).get<std::int64_t>();
      if (row.at("scope") == "whole_slide")
        r.whole_slide = c;
      else
        r.macrodissection = c;
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("recommendation payload schema: ") + e.what());
  }
}

}  // namespace dnayield
