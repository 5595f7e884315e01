// Planted two-cohort trial: range metrics per stratum, then the T-seq
// gamma GLM with extraction day as a covariate.

#include <cstdio>
#include <iostream>

#include "dnayield/service/synthetic_trial.hpp"
#include "dnayield/stats/trial.hpp"

using namespace dnayield;

int main() {
  service::TrialSynthConfig cfg;
  cfg.effects.t_seq_day_slope = 0.05;
  cfg.effects.t_seq_trad_shift = 0.15;
  const auto recs = service::synthesize_trial(cfg, 2024);

  std::cout << stats::format_metric_report(stats::compute_trial_metrics(recs)) << "\n";

  const auto fit = stats::build_analysis(recs, stats::Outcome::log_t_seq, {"extraction_day"});
  std::cout << stats::format_glm_summary(fit);
  return 0;
}
