// Synthetic slides -> fitted model -> store -> pipeline run -> accepted
// decision -> trial log. Writes everything under a scratch store directory.
//
//   end_to_end [store_dir]

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "dnayield/service/pipeline.hpp"
#include "dnayield/service/store.hpp"
#include "dnayield/service/synthetic.hpp"

using namespace dnayield;
using namespace dnayield::service;

int main(int argc, char** argv) {
  const std::filesystem::path root = argc > 1 ? argv[1] : "end_to_end_store";
  std::filesystem::remove_all(root);

  SyntheticConfig cfg;
  cfg.slides.n_slides = 120;
  cfg.trial = TrialSynthConfig{};
  const auto synth = generate_synthetic(cfg, 7);

  // first 100 slides train the model, the rest go through the service
  std::vector<SyntheticSlide> train(synth.slides.begin(), synth.slides.begin() + 100);
  const auto fit = fit_config(feature_dataset(train, 7), {TransformKind::natural_log, Regularization::L1, 0.01});
  std::printf("fit: %zu slides, r_train %.4f, converged %s\n", fit.report.samples_used, fit.report.r_train,
              fit.report.converged ? "yes" : "no");

  Store store(root);
  const auto version = store.put_model(fit.model);
  std::vector<std::string> ids;
  for (std::size_t i = 100; i < synth.bundles.size(); ++i) ids.push_back(store.ingest(synth.bundles[i]));

  for (const auto& id : ids) {
    const auto run = run_pipeline(store, id, version);
    std::printf("%s  %-9s", id.c_str(), run.status.c_str());
    for (const auto& s : run.stages) std::printf(" %s:%s", s.name.c_str(), s.status.c_str());
    std::printf("\n");
  }

  const auto payload = nlohmann::json::parse(*store.recommendation_payload(ids.front()));
  std::cout << "\nrecommendation for " << ids.front() << ":\n" << payload.dump(2) << "\n\n";

  ReviewDecision d;
  d.slide_id = ids.front();
  d.accepted = true;
  d.chosen_target = 400;
  d.pathologist_id = "P1";
  d.decided_at = "2024-03-01T09:00:00Z";
  const auto stored = store.record_decision(d);
  std::printf("decision #%zu: %s scope, %lld slides\n", stored.sequence, stored.scope.c_str(),
              static_cast<long long>(stored.chosen_slide_count.value_or(-1)));

  for (const auto& r : synth.trial) store.record_outcome(r);
  const auto log = store.export_trial_log();
  std::printf("\ntrial log: %zu bytes, first lines:\n", log.size());
  std::size_t pos = 0;
  for (int line = 0; line < 3 && pos != std::string::npos; ++line) {
    const auto next = log.find('\n', pos);
    std::cout << log.substr(pos, next - pos) << "\n";
    pos = next == std::string::npos ? next : next + 1;
  }
  return 0;
}
