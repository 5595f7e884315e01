#pragma once

// key=value configuration shared by the CLI and the HTTP service. Unknown
// keys are an error so that typos do not silently fall back to defaults.

#include <cstdint>
#include <string>
#include <vector>

#include "dnayield/core/text.hpp"
#include "dnayield/recommend/calibration.hpp"
#include "dnayield/recommend/recommendation.hpp"
#include "dnayield/stats/hypothesis.hpp"
#include "dnayield/stats/trial.hpp"

namespace dnayield::service {

struct ServiceConfig {
  std::vector<double> targets = default_targets();
  SuccessConstraints success;
  FailureThresholds failure;
  mask::MacroParams morphology;
  features::FeatureOptions features;
  stats::StrataConfig strata;
  stats::ZSource z_source = stats::ZSource::tabulated;
  int n_sim = 250;
  int n_boot = 2000;
  std::size_t workers = 2;
  std::string model;  // model version to serve by default; empty = newest in store
  std::uint64_t seed = 0;

  RecommendOptions recommend_options() const {
    RecommendOptions o;
    o.targets = targets;
    o.macro = morphology;
    o.features = features;
    o.seed = seed;
    return o;
  }

  void validate() const {
    detail::require(!targets.empty(), "config: targets must not be empty");
    for (double t : targets) detail::require(t > 0.0, "config: targets must be positive");
    success.validate();
    detail::require(morphology.kernel_side >= 1 && morphology.kernel_side % 2 == 1, "config: morphology.kernel_side must be odd");
    detail::require(morphology.iterations >= 0, "config: morphology.iterations must be >= 0");
    detail::require(morphology.max_contours >= 1, "config: morphology.max_contours must be >= 1");
    detail::require(morphology.working_magnification > 0.0, "config: morphology.working_magnification must be positive");
    detail::require(morphology.small_region_fraction >= 0.0 && morphology.small_region_fraction < 1.0,
                    "config: morphology.small_region_fraction must be in [0, 1)");
    detail::require(features.max_cells >= 1 && features.match_radius > 0.0 && features.tumor_mask_magnification > 0.0,
                    "config: features.* must be positive");
    detail::require(strata.range_lo < strata.range_hi, "config: stats.range_lo must be below stats.range_hi");
    detail::require(n_sim >= 100, "config: stats.n_sim must be >= 100");
    detail::require(n_boot >= 100, "config: stats.n_boot must be >= 100");
    detail::require(workers >= 1, "config: service.workers must be >= 1");
  }
};

namespace impl {

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidInput("config: " + key + " must be true or false");
}

}  // namespace impl

inline ServiceConfig parse_config(std::string_view body) {
  ServiceConfig c;
  for (const auto& [k, v] : text::parse_key_values(body)) {
    auto num = [&] { return text::to_double(v, k); };
    auto integer = [&] { return text::to_int(v, k); };
    if (k == "targets") {
      c.targets.clear();
      for (const auto& t : text::split(v, ',')) c.targets.push_back(text::to_double(text::trim(t), k));
    } else if (k == "success.yield_min") c.success.yield_min = num();
    else if (k == "success.yield_max") c.success.yield_max = num();
    else if (k == "success.max_slides") c.success.max_slides = num();
    else if (k == "failure.insufficient_below") c.failure.insufficient_below = num();
    else if (k == "failure.waste_slides_above") c.failure.waste_slides_above = num();
    else if (k == "failure.waste_yield_above") c.failure.waste_yield_above = num();
    else if (k == "failure.waste_yield_slides_above") c.failure.waste_yield_slides_above = num();
    else if (k == "morphology.small_region_fraction") c.morphology.small_region_fraction = num();
    else if (k == "morphology.working_magnification") c.morphology.working_magnification = num();
    else if (k == "morphology.kernel_side") c.morphology.kernel_side = static_cast<int>(integer());
    else if (k == "morphology.iterations") c.morphology.iterations = static_cast<int>(integer());
    else if (k == "morphology.max_contours") c.morphology.max_contours = static_cast<int>(integer());
    else if (k == "features.max_cells") c.features.max_cells = static_cast<std::size_t>(integer());
    else if (k == "features.match_radius") c.features.match_radius = num();
    else if (k == "features.tumor_mask_magnification") c.features.tumor_mask_magnification = num();
    else if (k == "stats.by_area") c.strata.by_area = impl::parse_bool(v, k);
    else if (k == "stats.by_quality") c.strata.by_quality = impl::parse_bool(v, k);
    else if (k == "stats.crossed") c.strata.crossed = impl::parse_bool(v, k);
    else if (k == "stats.area_split") c.strata.area_split = num();
    else if (k == "stats.range_lo") c.strata.range_lo = num();
    else if (k == "stats.range_hi") c.strata.range_hi = num();
    else if (k == "stats.z_source") {
      if (v == "tabulated") c.z_source = stats::ZSource::tabulated;
      else if (v == "exact") c.z_source = stats::ZSource::exact;
      else throw InvalidInput("config: stats.z_source must be tabulated or exact");
    } else if (k == "stats.n_sim") c.n_sim = static_cast<int>(integer());
    else if (k == "stats.n_boot") c.n_boot = static_cast<int>(integer());
    else if (k == "service.workers") c.workers = static_cast<std::size_t>(integer());
    else if (k == "service.model") c.model = v;
    else if (k == "seed") c.seed = static_cast<std::uint64_t>(integer());
    else throw InvalidInput("config: unknown key '" + k + "'");
  }
  c.validate();
  return c;
}

inline ServiceConfig load_config(const std::string& path) { return parse_config(text::read_file(path)); }

}  // namespace dnayield::service
