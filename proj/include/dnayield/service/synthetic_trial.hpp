#pragma once

// Synthetic trial logs with plantable cohort, quality and day-of-week
// effects, for exercising the trial analytics end to end.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dnayield/core/error.hpp"
#include "dnayield/core/random.hpp"
#include "dnayield/stats/trial.hpp"

namespace dnayield::service {

struct CohortEffects {
  // first-attempt outcome probabilities per cohort; target gets the rest
  double overshoot_trad = 0.32;
  double overshoot_smart = 0.18;
  double undershoot_trad = 0.12;
  double undershoot_smart = 0.12;
  // ln E[T-seq] = ln(base) + day_slope * day + quality_slope * quality + trad_shift * [Trad]
  double t_seq_base_days = 12.0;
  double t_seq_day_slope = 0.0;
  double t_seq_quality_slope = 0.0;
  double t_seq_trad_shift = 0.0;
  double t_seq_shape = 4.0;  // gamma shape, CV = 1/sqrt(shape)
  double missing_t_seq = 0.03;

  void validate() const {
    for (double p : {overshoot_trad, overshoot_smart, undershoot_trad, undershoot_smart, missing_t_seq})
      detail::require(p >= 0.0 && p <= 1.0, "cohort effect probabilities must be in [0, 1]");
    detail::require(overshoot_trad + undershoot_trad <= 1.0 && overshoot_smart + undershoot_smart <= 1.0,
                    "undershoot + overshoot must not exceed 1");
    detail::require(t_seq_base_days > 0.0 && t_seq_shape > 0.0, "T-seq base and shape must be positive");
  }
};

struct TrialSynthConfig {
  std::size_t n_trad = 233;
  std::size_t n_smart = 243;
  CohortEffects effects;
};

inline std::string synthetic_sample_id(std::uint64_t seed, std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "S%llu-%05zu", static_cast<unsigned long long>(seed), i);
  return buf;
}

/// Each record's first-attempt class is drawn independently with the
/// cohort's probabilities, so realized fractions vary around the planted
/// rates from seed to seed.
inline std::vector<stats::TrialRecord> synthesize_trial(const TrialSynthConfig& cfg, std::uint64_t seed) {
  const auto& e = cfg.effects;
  e.validate();
  detail::require(cfg.n_trad + cfg.n_smart > 0, "synthetic trial needs at least one record");
  Rng rng(seed);
  static const char* procedures[] = {"biopsy", "resection"};
  static const char* pathologists[] = {"P1", "P2", "P3", "P4"};
  static const char* techs[] = {"T1", "T2", "T3"};
  std::vector<stats::TrialRecord> out;
  const std::size_t n = cfg.n_trad + cfg.n_smart;
  for (std::size_t i = 0; i < n; ++i) {
    stats::TrialRecord r;
    r.sample_id = synthetic_sample_id(seed, i);
    r.cohort = i < cfg.n_trad ? stats::Cohort::Trad : stats::Cohort::SmartPath;
    const bool trad = r.cohort == stats::Cohort::Trad;
    const double p_over = trad ? e.overshoot_trad : e.overshoot_smart;
    const double p_under = trad ? e.undershoot_trad : e.undershoot_smart;
    const double u = rng.uniform();
    double mass;
    if (u < p_under)
      mass = std::exp(rng.uniform(std::log(10.0), std::log(99.0)));
    else if (u < p_under + p_over)
      mass = std::exp(rng.uniform(std::log(2001.0), std::log(8000.0)));
    else
      mass = std::exp(rng.uniform(std::log(100.0), std::log(2000.0)));
    r.extraction_count = 1 + static_cast<int>(rng.poisson(mass < 100.0 ? 1.0 : 0.1));
    r.dna_masses.push_back(mass);
    for (int k = 1; k < r.extraction_count; ++k) r.dna_masses.push_back(std::exp(rng.uniform(std::log(50.0), std::log(1500.0))));
    r.n_slides_first = trad ? static_cast<int>(rng.uniform_int(5, 12)) : static_cast<int>(rng.uniform_int(1, 20));
    r.tissue_area_mm2 = std::exp(rng.normal(std::log(85.0), 0.8));
    r.extraction_quality = static_cast<stats::Quality>(rng.uniform_int(0, 2));
    r.procedure = procedures[rng.uniform_int(0, 1)];
    r.pathologist = pathologists[rng.uniform_int(0, 3)];
    r.tech_group = techs[rng.uniform_int(0, 2)];
    r.extraction_day = static_cast<int>(rng.uniform_int(0, 6));
    r.sample_age_days = std::exp(rng.normal(std::log(180.0), 0.7));
    const double eta = std::log(e.t_seq_base_days) + e.t_seq_day_slope * r.extraction_day +
                       e.t_seq_quality_slope * static_cast<double>(r.extraction_quality) +
                       (trad ? e.t_seq_trad_shift : 0.0);
    const double t = rng.gamma(e.t_seq_shape, std::exp(eta) / e.t_seq_shape);
    if (!(rng.uniform() < e.missing_t_seq)) r.t_seq_days = std::max(t, 0.01);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace dnayield::service
