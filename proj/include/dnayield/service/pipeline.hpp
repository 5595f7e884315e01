#pragma once

// Stage runner: ingest -> macro_estimate -> features_ws -> features_macro
// -> predict -> recommend. A failed stage halts the rest, which are marked
// skipped. All artifacts go to the store as blobs.

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dnayield/mask/mask_io.hpp"
#include "dnayield/recommend/recommendation.hpp"
#include "dnayield/service/store.hpp"

namespace dnayield::service {

struct PipelineOptions {
  RecommendOptions recommend;
};

namespace impl {

inline StageRecord* find_stage(PipelineRun& r, const std::string& name) {
  for (auto& s : r.stages)
    if (s.name == name) return &s;
  return nullptr;
}

inline void fail_from(PipelineRun& r, const std::string& stage, const std::string& what) {
  bool after = false;
  for (auto& s : r.stages) {
    if (s.name == stage) {
      s.status = "failed";
      s.detail = what;
      after = true;
    } else if (after) {
      s.status = "skipped";
      s.detail = "halted after " + stage + " failed";
    }
  }
  r.status = "failed";
}

}  // namespace impl

inline PipelineRun new_pipeline_run(const std::string& run_id, const std::string& slide_id, const std::string& model_version,
                                    std::uint64_t seed) {
  PipelineRun r;
  r.run_id = run_id;
  r.slide_id = slide_id;
  r.model_version = model_version;
  r.seed = seed;
  for (const auto& n : stage_names()) r.stages.push_back({n, "pending", 0.0, ""});
  return r;
}

/// Executes every stage synchronously and records the finished run in the
/// store. Identical (bundle, model, seed) give byte-identical artifacts.
inline PipelineRun execute_pipeline(Store& store, PipelineRun run, const PipelineOptions& opt = {}) {
  run.status = "running";
  features::SlideInputs in;
  std::string bundle_hash;
  YieldModel model;
  {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto b = store.load_bundle(run.slide_id);
      bundle_hash = store.bundle_hash(run.slide_id);
      if (bundle_content_hash(b) != bundle_hash) throw IoError("stored bundle does not match its content hash");
      in = parse_bundle(b);
      in.slide_id = run.slide_id;
      model = store.load_model(run.model_version);
    } catch (const std::exception& e) {
      impl::fail_from(run, "ingest", e.what());
      store.put_run(run);
      return run;
    }
    auto* s = impl::find_stage(run, "ingest");
    s->status = "ok";
    s->duration_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }

  RecommendationBuild build;
  try {
    auto recopt = opt.recommend;
    recopt.seed = run.seed;
    build = build_recommendation(model, in, recopt, [&](const std::string& stage, double ms) {
      auto* s = impl::find_stage(run, stage);
      s->status = "ok";
      s->duration_ms = ms;
    });
  } catch (const StageError& e) {
    impl::fail_from(run, e.stage(), e.what());
    store.put_run(run);
    return run;
  }
  if (!build.macro.tumor_detected()) {
    auto* s = impl::find_stage(run, "features_macro");
    s->status = "skipped";
    s->detail = "no tumor detected";
  }

  try {
    const auto tumor = features::tumor_mask(in, opt.recommend.features);
    const auto macro = build.macro.area ? *build.macro.area : tumor.blank_like();
    run.artifacts["tumor_mask"] = store.put_blob(mask::encode_pgm(tumor));
    run.artifacts["tumor_mask_meta"] = store.put_blob(mask::encode_sidecar(tumor));
    run.artifacts["macro_mask"] = store.put_blob(mask::encode_pgm(macro));
    run.artifacts["macro_mask_meta"] = store.put_blob(mask::encode_sidecar(macro));
    run.artifacts["features_ws"] = store.put_blob(features::format_feature_csv(build.ws_features));
    if (build.macro_features) run.artifacts["features_macro"] = store.put_blob(features::format_feature_csv(*build.macro_features));
    auto rec = build.recommendation;
    rec.slide_id = run.slide_id;
    rec.bundle_hash = bundle_hash;
    rec.model_version = run.model_version;
    rec.macro_mask_ref = run.artifacts["macro_mask"];
    run.recommendation_ref = store.put_blob(recommendation_payload(rec));
  } catch (const std::exception& e) {
    impl::fail_from(run, "recommend", std::string("persisting artifacts: ") + e.what());
    store.put_run(run);
    return run;
  }
  run.status = "succeeded";
  store.put_run(run);
  return run;
}

inline PipelineRun run_pipeline(Store& store, const std::string& slide_id, const std::string& model_version,
                                std::uint64_t seed = 0, const PipelineOptions& opt = {}) {
  if (!store.has_slide(slide_id)) throw NotFound("slide '" + slide_id + "' not in store");
  auto run = new_pipeline_run(store.new_run_id(slide_id, model_version, seed), slide_id, model_version, seed);
  return execute_pipeline(store, std::move(run), opt);
}

/// Worker pool over a FIFO queue. Distinct slides run concurrently; runs of
/// the same slide are serialized by a per-slide mutex. submit() returns as
/// soon as the queued run is recorded, so callers poll Store::run().
class PipelineRunner {
 public:
  PipelineRunner(Store& store, std::size_t workers = 2, PipelineOptions opt = {}) : store_(store), opt_(std::move(opt)) {
    detail::require(workers >= 1, "pipeline runner needs at least one worker");
    for (std::size_t i = 0; i < workers; ++i) threads_.emplace_back([this] { loop(); });
  }

  ~PipelineRunner() {
    {
      std::lock_guard lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  PipelineRunner(const PipelineRunner&) = delete;
  PipelineRunner& operator=(const PipelineRunner&) = delete;

  std::string submit(const std::string& slide_id, const std::string& model_version, std::uint64_t seed = 0) {
    if (!store_.has_slide(slide_id)) throw NotFound("slide '" + slide_id + "' not in store");
    store_.load_model(model_version);  // fail fast on unknown versions
    auto run = new_pipeline_run(store_.new_run_id(slide_id, model_version, seed), slide_id, model_version, seed);
    store_.put_run(run);
    {
      std::lock_guard lk(mu_);
      queue_.push_back(run);
      ++pending_;
    }
    cv_.notify_one();
    return run.run_id;
  }

  void wait_idle() {
    std::unique_lock lk(mu_);
    idle_cv_.wait(lk, [&] { return pending_ == 0; });
  }

 private:
  void loop() {
    for (;;) {
      PipelineRun run;
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return stop_ || !queue_.empty(); });
        if (queue_.empty()) return;
        run = std::move(queue_.front());
        queue_.pop_front();
      }
      std::shared_ptr<std::mutex> slide_mu;
      {
        std::lock_guard lk(mu_);
        auto& m = slide_locks_[run.slide_id];
        if (!m) m = std::make_shared<std::mutex>();
        slide_mu = m;
      }
      {
        std::lock_guard slk(*slide_mu);
        run.status = "running";
        store_.put_run(run);
        try {
          execute_pipeline(store_, run, opt_);
        } catch (const std::exception& e) {
          impl::fail_from(run, "ingest", e.what());
          store_.put_run(run);
        }
      }
      {
        std::lock_guard lk(mu_);
        --pending_;
      }
      idle_cv_.notify_all();
    }
  }

  Store& store_;
  PipelineOptions opt_;
  std::mutex mu_;
  std::condition_variable cv_, idle_cv_;
  std::deque<PipelineRun> queue_;
  std::map<std::string, std::shared_ptr<std::mutex>> slide_locks_;
  std::size_t pending_ = 0;
  bool stop_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace dnayield::service
