#pragma once

// One entry point for synthetic data: slide bundles with ground-truth
// extraction events, an optional trial log, and the feature dataset the
// model fitters consume.

#include <optional>
#include <vector>

#include "dnayield/model/sweep.hpp"
#include "dnayield/service/bundle.hpp"
#include "dnayield/service/synthetic_slides.hpp"
#include "dnayield/service/synthetic_trial.hpp"

namespace dnayield::service {

struct SyntheticConfig {
  SlideSynthConfig slides;
  std::optional<TrialSynthConfig> trial;  // cohort effects live here
};

struct SyntheticOutput {
  std::vector<SyntheticSlide> slides;
  std::vector<SlideBundle> bundles;  // parallel to `slides`
  std::vector<stats::TrialRecord> trial;
};

inline SyntheticOutput generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  SyntheticOutput out;
  out.slides = synthesize_slides(cfg.slides, derive_seed(seed, 1));
  out.bundles.reserve(out.slides.size());
  for (const auto& s : out.slides) out.bundles.push_back(bundle_from_synthetic(s));
  if (cfg.trial) out.trial = synthesize_trial(*cfg.trial, derive_seed(seed, 2));
  return out;
}

/// Whole-slide feature rows labelled with ground_truth_label.
inline Dataset feature_dataset(std::span<const SyntheticSlide> slides, std::uint64_t seed,
                               const features::FeatureOptions& opt = {}) {
  Dataset d;
  d.feature_names = features::feature_names();
  d.x.resize(static_cast<Eigen::Index>(slides.size()), static_cast<Eigen::Index>(features::kFeatureCount));
  for (std::size_t i = 0; i < slides.size(); ++i) {
    const auto fv = features::generate_feature_vector(slides[i].inputs, nullptr, seed, opt);
    for (std::size_t j = 0; j < fv.values.size(); ++j) d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fv.values[j];
    d.y.push_back(ground_truth_label(slides[i].events));
    d.ids.push_back(slides[i].inputs.slide_id);
  }
  return d;
}

}  // namespace dnayield::service
