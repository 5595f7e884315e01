#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "dnayield/mask/mask_io.hpp"
#include "dnayield/service/config.hpp"
#include "dnayield/service/http_api.hpp"
#include "dnayield/service/pipeline.hpp"
#include "dnayield/service/store.hpp"
#include "dnayield/service/synthetic.hpp"

using namespace dnayield;
using namespace dnayield::service;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> n{0};
    path = fs::temp_directory_path() / ("dnayield-svc-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

SlideSynthConfig small_config() {
  SlideSynthConfig c;
  c.grid_cols = 20;
  c.grid_rows = 16;
  c.tissue_fraction_min = 0.3;
  c.tissue_fraction_max = 0.5;
  return c;
}

SlideSynthConfig tiny_config() {
  SlideSynthConfig c;
  c.grid_cols = 6;
  c.grid_rows = 5;
  c.tile_stride = 16;
  c.cell_density = 2.0;
  c.tissue_fraction_min = 0.2;
  c.tissue_fraction_max = 0.6;
  return c;
}

SlideBundle bundle(std::uint64_t seed, SlideSynthConfig cfg = small_config()) {
  return bundle_from_synthetic(synthesize_slide(cfg, seed, "x"));
}

// Yield driven by total cell count only.
YieldModel count_model() {
  YieldModel m;
  const std::size_t p = features::kFeatureCount;
  m.conditioning.p05.assign(p, 0.0);
  m.conditioning.p995.assign(p, 1e4);
  m.conditioning.range.assign(p, 1e4);
  m.coefficients.assign(p, 0.0);
  m.coefficients[0] = 1.0;
  m.intercept = std::log(0.05 * 1e4);
  m.version = model_version_of(m);
  return m;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string l;
  while (std::getline(in, l)) ++n;
  return n;
}

const StageRecord& stage(const PipelineRun& r, const std::string& name) {
  for (const auto& s : r.stages)
    if (s.name == name) return s;
  throw std::runtime_error("no stage " + name);
}

ReviewDecision accept(const std::string& slide, double target) {
  ReviewDecision d;
  d.slide_id = slide;
  d.accepted = true;
  d.chosen_target = target;
  d.pathologist_id = "path-1";
  d.decided_at = "2026-01-05T10:00:00Z";
  return d;
}

ReviewDecision reject(const std::string& slide, RejectionReason why) {
  ReviewDecision d;
  d.slide_id = slide;
  d.accepted = false;
  d.rejection_reason = why;
  d.deviation = true;
  d.pathologist_id = "path-2";
  d.decided_at = "2026-01-05T11:00:00Z";
  return d;
}

// Slide with a finished recommendation, ready for decisions.
std::string ready_slide(Store& s, std::uint64_t seed = 3) {
  const auto id = s.ingest(bundle(seed));
  const auto v = s.put_model(count_model());
  EXPECT_TRUE(run_pipeline(s, id, v).succeeded());
  return id;
}

std::vector<std::string> csv_rows(const std::string& body) {
  std::vector<std::string> rows;
  std::istringstream in(body);
  std::string l;
  while (std::getline(in, l)) rows.push_back(l);
  return rows;
}

}  // namespace

// ---- ingest ------------------------------------------------------------------------

TEST(Ingest, SameBytesSameId) {
  TempDir t;
  Store s(t.path);
  const auto b = bundle(1);
  const auto a = s.ingest(b);
  const auto lines = line_count(t.path / "index.jsonl");
  EXPECT_EQ(s.ingest(b), a);
  EXPECT_EQ(line_count(t.path / "index.jsonl"), lines);
  EXPECT_EQ(a, slide_id_for_hash(bundle_content_hash(b)));
  EXPECT_NE(s.ingest(bundle(2)), a);
}

TEST(Ingest, MissingLymphFileNamed) {
  TempDir t;
  Store s(t.path);
  auto b = bundle(1);
  b.lymph_cells.reset();
  try {
    s.ingest(b);
    FAIL() << "expected rejection";
  } catch (const BundleError& e) {
    ASSERT_EQ(e.fields().size(), 1u);
    EXPECT_EQ(e.fields()[0], "lymph_cells: missing reference");
  }
  EXPECT_TRUE(s.slide_ids().empty());
}

TEST(Ingest, EveryBadFieldReported) {
  TempDir t;
  Store s(t.path);
  auto b = bundle(1);
  b.tile_map = "not,a,tile,map\n";
  b.general_cells.reset();
  b.metadata.pixel_pitch = -1;
  try {
    s.ingest(b);
    FAIL() << "expected rejection";
  } catch (const BundleError& e) {
    std::set<std::string> prefixes;
    for (const auto& f : e.fields()) prefixes.insert(f.substr(0, f.find(':')));
    EXPECT_EQ(prefixes, (std::set<std::string>{"metadata.pixel_pitch", "tile_map", "general_cells"}));
  }
}

TEST(Ingest, ThousandDistinctAndRetrievable) {
  TempDir t;
  std::vector<std::pair<std::string, std::string>> ids;  // id, hash
  {
    Store s(t.path);
    for (int i = 0; i < 1000; ++i) {
      const auto b = bundle(static_cast<std::uint64_t>(i) + 100, tiny_config());
      ids.emplace_back(s.ingest(b), bundle_content_hash(b));
    }
  }
  std::set<std::string> distinct;
  for (const auto& [id, h] : ids) distinct.insert(id);
  EXPECT_EQ(distinct.size(), 1000u);
  Store reopened(t.path);
  EXPECT_EQ(reopened.slide_ids().size(), 1000u);
  for (const auto& [id, h] : ids) {
    const auto b = reopened.load_bundle(id);
    ASSERT_EQ(bundle_content_hash(b), h) << id;
    ASSERT_NO_THROW(parse_bundle(b));
  }
}

TEST(Ingest, BundleDirectoryRoundTrip) {
  TempDir t;
  auto b = bundle(5);
  b.metadata.cancer_type = "lung";
  write_bundle_dir(b, t.path / "b");
  const auto back = read_bundle_dir(t.path / "b");
  EXPECT_EQ(bundle_content_hash(back), bundle_content_hash(b));
  EXPECT_THROW(read_bundle_dir(t.path / "nope"), IoError);
}

TEST(Store, BlobsAreContentAddressed) {
  TempDir t;
  Store s(t.path);
  const auto a = s.put_blob("hello");
  EXPECT_EQ(a, sha256_hex("hello"));
  EXPECT_EQ(s.put_blob("hello"), a);
  EXPECT_EQ(s.get_blob(a), "hello");
  EXPECT_THROW(s.get_blob(sha256_hex("absent")), NotFound);
  EXPECT_THROW(s.get_blob("../../etc/passwd"), NotFound);
}

TEST(Store, ModelRoundTripKeepsVersion) {
  TempDir t;
  Store s(t.path);
  const auto m = count_model();
  const auto v = s.put_model(m);
  EXPECT_EQ(v, m.version);
  EXPECT_EQ(s.put_model(m), v);
  EXPECT_EQ(s.model_versions().size(), 1u);
  const auto back = Store(t.path).load_model(v);
  EXPECT_EQ(serialize_model(back), serialize_model(m));
  EXPECT_THROW(s.load_model("nope"), NotFound);
}

TEST(Store, CorruptIndexLineNamed) {
  TempDir t;
  { Store s(t.path); s.put_blob("x"); }
  std::ofstream(t.path / "index.jsonl", std::ios::app) << "{not json\n";
  try {
    Store s(t.path);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos) << e.what();
  }
}

// ---- pipeline -------------------------------------------------------------------------

TEST(Pipeline, HealthyBundleRunsAllSixStages) {
  TempDir t;
  Store s(t.path);
  const auto id = s.ingest(bundle(3));
  const auto v = s.put_model(count_model());
  const auto r = run_pipeline(s, id, v);
  ASSERT_TRUE(r.succeeded());
  ASSERT_EQ(r.stages.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(r.stages[i].name, stage_names()[i]);
    EXPECT_EQ(r.stages[i].status, "ok") << r.stages[i].name << ": " << r.stages[i].detail;
    EXPECT_GE(r.stages[i].duration_ms, 0.0);
  }
  const auto payload = nlohmann::json::parse(*s.recommendation_payload(id));
  EXPECT_EQ(payload["model_version"], v);
  EXPECT_EQ(payload["slide_id"], id);
  EXPECT_EQ(payload["bundle_hash"], s.bundle_hash(id));
  EXPECT_EQ(payload["macro_mask_ref"], r.artifacts.at("macro_mask"));
  const auto mask = mask::decode_pgm(s.get_blob(r.artifacts.at("macro_mask")), 1.0, 1.0);
  EXPECT_GT(mask.foreground_count(), 0u);
  for (const char* a : {"tumor_mask", "features_ws", "features_macro"}) EXPECT_TRUE(r.artifacts.count(a)) << a;
  const auto fv = features::parse_feature_csv(s.get_blob(r.artifacts.at("features_ws")));
  EXPECT_EQ(fv.values.size(), features::kFeatureCount);
}

TEST(Pipeline, NoTumorServesWholeSlideOnly) {
  TempDir t;
  Store s(t.path);
  auto cfg = small_config();
  cfg.tumor_fraction = 0.0;
  const auto id = s.ingest(bundle(4, cfg));
  const auto r = run_pipeline(s, id, s.put_model(count_model()));
  ASSERT_TRUE(r.succeeded());
  EXPECT_EQ(stage(r, "macro_estimate").status, "ok");
  EXPECT_EQ(stage(r, "features_macro").status, "skipped");
  EXPECT_EQ(stage(r, "features_macro").detail, "no tumor detected");
  EXPECT_EQ(stage(r, "recommend").status, "ok");
  const auto payload = nlohmann::json::parse(*s.recommendation_payload(id));
  EXPECT_FALSE(payload["tumor_detected"].get<bool>());
  EXPECT_TRUE(payload["rows"][1]["absent"].get<bool>());
  EXPECT_FALSE(r.artifacts.count("features_macro"));
  EXPECT_EQ(mask::decode_pgm(s.get_blob(r.artifacts.at("macro_mask")), 1, 1).foreground_count(), 0u);
}

TEST(Pipeline, RerunIsByteIdentical) {
  TempDir t;
  Store s(t.path);
  const auto id = s.ingest(bundle(6));
  const auto v = s.put_model(count_model());
  const auto a = run_pipeline(s, id, v, 7), b = run_pipeline(s, id, v, 7);
  EXPECT_NE(a.run_id, b.run_id);
  EXPECT_EQ(a.recommendation_ref, b.recommendation_ref);
  EXPECT_EQ(a.artifacts, b.artifacts);
  // a second store fed the same inputs agrees too
  TempDir t2;
  Store s2(t2.path);
  const auto c = run_pipeline(s2, s2.ingest(bundle(6)), s2.put_model(count_model()), 7);
  EXPECT_EQ(s.get_blob(a.recommendation_ref), s2.get_blob(c.recommendation_ref));
}

TEST(Pipeline, UnknownModelFailsIngestAndSkipsRest) {
  TempDir t;
  Store s(t.path);
  const auto id = s.ingest(bundle(3));
  const auto r = run_pipeline(s, id, "0000000000000000");
  EXPECT_EQ(r.status, "failed");
  EXPECT_EQ(stage(r, "ingest").status, "failed");
  EXPECT_NE(stage(r, "ingest").detail.find("model version"), std::string::npos);
  for (std::size_t i = 1; i < 6; ++i) EXPECT_EQ(r.stages[i].status, "skipped");
  EXPECT_FALSE(s.latest_run(id));
  EXPECT_EQ(s.run(r.run_id)->status, "failed");
}

TEST(Pipeline, PredictFailureIsTaggedAndHalts) {
  TempDir t;
  Store s(t.path);
  const auto id = s.ingest(bundle(3));
  auto m = count_model();
  m.coefficients.resize(10);  // wrong width for a 3,461-value vector
  m.conditioning.p05.resize(10);
  m.conditioning.p995.resize(10);
  m.conditioning.range.resize(10);
  m.version = model_version_of(m);
  const auto r = run_pipeline(s, id, s.put_model(m));
  EXPECT_EQ(r.status, "failed");
  EXPECT_EQ(stage(r, "features_ws").status, "ok");
  EXPECT_EQ(stage(r, "predict").status, "failed");
  EXPECT_EQ(stage(r, "recommend").status, "skipped");
  EXPECT_TRUE(r.recommendation_ref.empty());
}

TEST(Pipeline, UnknownSlideRejected) {
  TempDir t;
  Store s(t.path);
  EXPECT_THROW(run_pipeline(s, "sl-0000", "v"), NotFound);
}

TEST(Runner, ConcurrentSlidesAgreeWithSerialRuns) {
  TempDir t;
  Store s(t.path);
  const auto v = s.put_model(count_model());
  std::vector<std::string> ids;
  for (std::uint64_t k = 0; k < 3; ++k) ids.push_back(s.ingest(bundle(20 + k)));
  std::vector<std::string> runs;
  {
    PipelineRunner runner(s, 3);
    for (int rep = 0; rep < 2; ++rep)
      for (const auto& id : ids) runs.push_back(runner.submit(id, v, 1));
    for (const auto& r : runs) EXPECT_TRUE(s.run(r).has_value());  // visible before completion
    runner.wait_idle();
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto r = s.run(runs[i]);
    ASSERT_TRUE(r && r->succeeded()) << runs[i];
    EXPECT_EQ(r->recommendation_ref, s.run(runs[i % 3])->recommendation_ref);
  }
  TempDir t2;
  Store serial(t2.path);
  const auto r0 = run_pipeline(serial, serial.ingest(bundle(20)), serial.put_model(count_model()), 1);
  EXPECT_EQ(serial.get_blob(r0.recommendation_ref), s.get_blob(s.run(runs[0])->recommendation_ref));
  EXPECT_THROW(PipelineRunner(s, 1).submit(ids[0], "nope"), NotFound);
}

// ---- decisions -------------------------------------------------------------------------

TEST(Decision, BeforeRecommendationRejected) {
  TempDir t;
  Store s(t.path);
  const auto id = s.ingest(bundle(3));
  EXPECT_THROW(s.record_decision(accept(id, 400)), StateError);
  EXPECT_TRUE(s.decisions(id).empty());
}

TEST(Decision, InvariantViolationsRejected) {
  TempDir t;
  Store s(t.path);
  const auto id = ready_slide(s);
  auto d = accept(id, 400);
  d.chosen_target.reset();
  EXPECT_THROW(s.record_decision(d), InvalidInput);
  auto r = reject(id, RejectionReason::clinical);
  r.rejection_reason.reset();
  EXPECT_THROW(s.record_decision(r), InvalidInput);
  r = reject(id, RejectionReason::clinical);
  r.chosen_target = 400;
  EXPECT_THROW(s.record_decision(r), InvalidInput);
  EXPECT_THROW(s.record_decision(accept(id, 123)), InvalidInput);
  EXPECT_THROW(s.record_decision(accept("sl-none", 400)), NotFound);
  EXPECT_TRUE(s.decisions(id).empty());
}

TEST(Decision, AcceptedCountMatchesPayloadInLog) {
  TempDir t;
  Store s(t.path);
  const auto id = ready_slide(s);
  const auto payload = nlohmann::json::parse(*s.recommendation_payload(id));
  const auto stored = s.record_decision(accept(id, 400));
  EXPECT_EQ(stored.scope, "macrodissection");
  const std::int64_t expected = payload["rows"][1]["slides"]["400"];
  EXPECT_EQ(*stored.chosen_slide_count, expected);

  const auto rows = csv_rows(s.export_trial_log());
  ASSERT_EQ(rows.size(), 2u);
  const auto t0 = text::parse_csv(s.export_trial_log());
  EXPECT_EQ(t0.rows[0][t0.require_column("chosen_slide_count")], std::to_string(expected));
  EXPECT_EQ(t0.rows[0][t0.require_column("chosen_target_ng")], "400");
  EXPECT_EQ(t0.rows[0][t0.require_column("decision_accepted")], "true");
  EXPECT_EQ(t0.rows[0][t0.require_column("sample_id")], id);
  EXPECT_EQ(t0.rows[0][t0.require_column("model_version")], count_model().version);
}

TEST(Decision, WholeSlideScopeUsesWholeSlideRow) {
  TempDir t;
  Store s(t.path);
  const auto id = ready_slide(s);
  const auto payload = nlohmann::json::parse(*s.recommendation_payload(id));
  auto d = accept(id, 1000);
  d.scope = "whole_slide";
  const std::int64_t expected = payload["rows"][0]["slides"]["1000"];
  EXPECT_EQ(*s.record_decision(d).chosen_slide_count, expected);
}

TEST(Decision, RejectedClinicalHasNoTarget) {
  TempDir t;
  Store s(t.path);
  const auto id = ready_slide(s);
  const auto st = s.record_decision(reject(id, RejectionReason::clinical));
  EXPECT_FALSE(st.decision.chosen_target);
  EXPECT_FALSE(st.chosen_slide_count);
  const auto tab = text::parse_csv(s.export_trial_log());
  EXPECT_EQ(tab.rows[0][tab.require_column("rejection_reason")], "clinical");
  EXPECT_EQ(tab.rows[0][tab.require_column("chosen_target_ng")], "");
  EXPECT_EQ(tab.rows[0][tab.require_column("deviation")], "true");
}

TEST(Decision, HistoryIsAppendOnly) {
  TempDir t;
  std::string id;
  {
    Store s(t.path);
    id = ready_slide(s);
    s.record_decision(accept(id, 100));
    s.record_decision(reject(id, RejectionReason::model_performance));
  }
  Store s(t.path);
  const auto h = s.decisions(id);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_TRUE(h[0].decision.accepted);
  EXPECT_FALSE(h[0].current);
  EXPECT_FALSE(h[1].decision.accepted);
  EXPECT_TRUE(h[1].current);
  EXPECT_LT(h[0].sequence, h[1].sequence);
  const auto tab = text::parse_csv(s.export_trial_log());
  EXPECT_EQ(tab.rows[0][tab.require_column("rejection_reason")], "model_performance");
}

TEST(Decision, StaleReferenceRejected) {
  TempDir t;
  Store s(t.path);
  const auto id = ready_slide(s);
  auto d = accept(id, 400);
  d.recommendation_ref = sha256_hex("something else");
  EXPECT_THROW(s.record_decision(d), StateError);
  d.recommendation_ref = s.latest_run(id)->recommendation_ref;
  EXPECT_NO_THROW(s.record_decision(d));
}

// ---- trial log ------------------------------------------------------------------------

TEST(TrialLog, EmptyStoreIsHeaderOnly) {
  TempDir t;
  Store s(t.path);
  const auto rows = csv_rows(s.export_trial_log());
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].substr(0, stats::trial_csv_header().size()), stats::trial_csv_header());
  EXPECT_NE(rows[0].find("chosen_slide_count"), std::string::npos);
}

TEST(TrialLog, PlantedTrialExportsEveryRecord) {
  TempDir t;
  Store s(t.path);
  auto recs = synthesize_trial({}, 41);
  ASSERT_EQ(recs.size(), 476u);
  std::reverse(recs.begin(), recs.end());
  for (const auto& r : recs) s.record_outcome(r);
  const auto log = s.export_trial_log();
  EXPECT_EQ(csv_rows(log).size(), 477u);
  const auto back = stats::parse_trial_csv(log);
  ASSERT_EQ(back.size(), 476u);
  EXPECT_TRUE(std::is_sorted(back.begin(), back.end(), [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; }));
  const auto direct = stats::compute_trial_metrics(synthesize_trial({}, 41));
  const auto via_log = stats::compute_trial_metrics(back);
  EXPECT_EQ(stats::metric_report_json(via_log).dump(), stats::metric_report_json(direct).dump());
  // reopening replays to the same export
  EXPECT_EQ(Store(t.path).export_trial_log(), log);
}

TEST(TrialLog, FiltersByCohortAndCompleteness) {
  TempDir t;
  Store s(t.path);
  const auto id = ready_slide(s);
  s.record_decision(accept(id, 400));
  for (const auto& r : synthesize_trial({}, 5)) s.record_outcome(r);
  EXPECT_EQ(csv_rows(s.export_trial_log()).size(), 478u);  // header, 476 outcomes, one decision-only
  EXPECT_EQ(csv_rows(s.export_trial_log({true, {}})).size(), 477u);
  const auto trad = stats::parse_trial_csv(s.export_trial_log({true, stats::Cohort::Trad}));
  EXPECT_EQ(trad.size(), 233u);
  EXPECT_EQ(s.trial_records({false, stats::Cohort::SmartPath}).size(), 243u);
}

TEST(TrialLog, LaterOutcomeSupersedes) {
  TempDir t;
  Store s(t.path);
  auto r = synthesize_trial({}, 2).front();
  s.record_outcome(r);
  r.n_slides_first += 1;
  s.record_outcome(r);
  const auto back = stats::parse_trial_csv(s.export_trial_log());
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].n_slides_first, r.n_slides_first);
}

// ---- synthetic data + config -----------------------------------------------------------

TEST(Synthetic, AggregatorIsDeterministic) {
  SyntheticConfig c;
  c.slides = tiny_config();
  c.slides.n_slides = 4;
  c.trial = TrialSynthConfig{};
  const auto a = generate_synthetic(c, 9), b = generate_synthetic(c, 9);
  ASSERT_EQ(a.bundles.size(), 4u);
  ASSERT_EQ(a.trial.size(), 476u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(bundle_content_hash(a.bundles[i]), bundle_content_hash(b.bundles[i]));
  EXPECT_EQ(stats::format_trial_csv(a.trial), stats::format_trial_csv(b.trial));
  c.slides.tumor_fraction = 0.0;
  for (const auto& s : generate_synthetic(c, 9).slides) EXPECT_EQ(s.planted.tumor, 0u);
  c.slides = small_config();
  c.slides.n_slides = 4;
  c.slides.noise_sigma = 0.0;
  const auto noiseless = generate_synthetic(c, 3);
  const auto d = feature_dataset(noiseless.slides, 0);
  // every scraped section carries the imaged section's cells, so mass / slides = c * cells
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& e = noiseless.slides[i].events.front();
    const double cells = static_cast<double>(noiseless.slides[i].planted.total);
    EXPECT_DOUBLE_EQ(e.dna_yield, c.slides.yield_per_cell_ng * cells * e.n_slides);
    EXPECT_NEAR(d.y[i], c.slides.yield_per_cell_ng * cells, 1e-12);
    EXPECT_DOUBLE_EQ(d.x(static_cast<Eigen::Index>(i), 0), cells);
  }
}

TEST(Config, ParsesOverridesAndRejectsUnknownKeys) {
  const auto c = parse_config(
      "# demo\ntargets = 200, 800\nsuccess.max_slides=20\nmorphology.iterations=10\nstats.z_source=exact\n"
      "stats.crossed=false\nservice.workers=4\n");
  EXPECT_EQ(c.targets, (std::vector<double>{200, 800}));
  EXPECT_EQ(c.success.max_slides, 20);
  EXPECT_EQ(c.morphology.iterations, 10);
  EXPECT_EQ(c.z_source, stats::ZSource::exact);
  EXPECT_FALSE(c.strata.crossed);
  EXPECT_EQ(c.workers, 4u);
  EXPECT_EQ(c.recommend_options().targets, c.targets);
  EXPECT_THROW(parse_config("succes.max_slides=3\n"), InvalidInput);
  EXPECT_THROW(parse_config("morphology.kernel_side=4\n"), InvalidInput);
  EXPECT_THROW(parse_config("stats.n_sim=10\n"), InvalidInput);
  EXPECT_THROW(parse_config("targets=\n"), InvalidInput);
}

// ---- HTTP ----------------------------------------------------------------------------------

namespace {

httplib::MultipartFormDataItems form(const SlideBundle& b) {
  httplib::MultipartFormDataItems f;
  auto add = [&](const char* name, const std::optional<std::string>& v, const char* file) {
    if (v) f.push_back({name, *v, file, "application/octet-stream"});
  };
  add("tile_map", b.tile_map, "tile_map.csv");
  add("general_cells", b.general_cells, "general_cells.csv");
  add("lymph_cells", b.lymph_cells, "lymph_cells.csv");
  add("image", b.image, "image.ppm");
  f.push_back({"metadata", format_metadata(b.metadata), "metadata.txt", "text/plain"});
  return f;
}

}  // namespace

TEST(Http, EndToEnd) {
  TempDir t;
  Store store(t.path);
  const auto v = store.put_model(count_model());
  ApiServer api(store);
  const int port = api.start();
  httplib::Client cli("127.0.0.1", port);

  auto health = cli.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(nlohmann::json::parse(health->body)["models"][0], v);

  auto bad = bundle(3);
  bad.lymph_cells.reset();
  auto r = cli.Post("/slides", form(bad));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 422);
  EXPECT_EQ(nlohmann::json::parse(r->body)["fields"][0], "lymph_cells: missing reference");

  r = cli.Post("/slides", form(bundle(3)));
  ASSERT_EQ(r->status, 201);
  const std::string id = nlohmann::json::parse(r->body)["slide_id"];
  r = cli.Post("/slides", form(bundle(3)));
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(nlohmann::json::parse(r->body)["slide_id"], id);

  EXPECT_EQ(cli.Get("/slides/" + id + "/recommendation")->status, 409);
  EXPECT_EQ(cli.Post("/slides/" + id + "/decision", accept(id, 400).pathologist_id, "application/json")->status, 422);
  EXPECT_EQ(cli.Post("/slides/" + id + "/decision", decision_json(accept(id, 400)).dump(), "application/json")->status, 409);
  EXPECT_EQ(cli.Post("/slides/sl-nope/run", "", "application/json")->status, 404);

  r = cli.Post("/slides/" + id + "/run", "", "application/json");
  ASSERT_EQ(r->status, 202);
  const std::string run_id = nlohmann::json::parse(r->body)["run_id"];
  nlohmann::json run;
  for (int i = 0; i < 600; ++i) {
    run = nlohmann::json::parse(cli.Get("/runs/" + run_id)->body);
    if (run["status"] == "succeeded" || run["status"] == "failed") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ASSERT_EQ(run["status"], "succeeded") << run.dump();
  EXPECT_EQ(run["stages"].size(), 6u);
  EXPECT_EQ(cli.Get("/runs/run-missing")->status, 404);

  auto rec = cli.Get("/slides/" + id + "/recommendation");
  ASSERT_EQ(rec->status, 200);
  const auto payload = nlohmann::json::parse(rec->body);
  EXPECT_EQ(payload["model_version"], v);
  const auto ref = rec->get_header_value("X-Recommendation-Ref");
  EXPECT_EQ(ref, run["recommendation_ref"]);

  auto mask_res = cli.Get("/slides/" + id + "/macro-mask");
  ASSERT_EQ(mask_res->status, 200);
  EXPECT_EQ(mask_res->get_header_value("Content-Type"), "image/x-portable-graymap");
  EXPECT_EQ(mask_res->body.substr(0, 2), "P5");
  EXPECT_EQ(mask_res->body, store.get_blob(payload["macro_mask_ref"]));

  auto body = decision_json(accept(id, 400));
  body["recommendation_ref"] = ref;
  r = cli.Post("/slides/" + id + "/decision", body.dump(), "application/json");
  ASSERT_EQ(r->status, 201) << r->body;
  EXPECT_EQ(nlohmann::json::parse(r->body)["chosen_slide_count"], payload["rows"][1]["slides"]["400"]);
  body = decision_json(reject(id, RejectionReason::clinical));
  body.erase("rejection_reason");
  EXPECT_EQ(cli.Post("/slides/" + id + "/decision", body.dump(), "application/json")->status, 422);
  body = decision_json(accept(id, 400));
  body["slide_id"] = "sl-other";
  EXPECT_EQ(cli.Post("/slides/" + id + "/decision", body.dump(), "application/json")->status, 422);

  auto hist = nlohmann::json::parse(cli.Get("/slides/" + id + "/decisions")->body);
  ASSERT_EQ(hist.size(), 1u);
  EXPECT_TRUE(hist[0]["current"].get<bool>());

  auto log = cli.Get("/trial/log");
  ASSERT_EQ(log->status, 200);
  const auto tab = text::parse_csv(log->body);
  ASSERT_EQ(tab.rows.size(), 1u);
  EXPECT_EQ(tab.rows[0][tab.require_column("chosen_slide_count")], payload["rows"][1]["slides"]["400"].dump());

  EXPECT_EQ(cli.Get("/trial/metrics")->status, 409);
  for (const auto& rr : synthesize_trial({}, 8)) store.record_outcome(rr);
  auto metrics = cli.Get("/trial/metrics");
  ASSERT_EQ(metrics->status, 200);
  const auto mj = nlohmann::json::parse(metrics->body);
  EXPECT_TRUE(mj.contains("strata"));
  EXPECT_EQ(cli.Get("/trial/log?complete_only=true&cohort=Trad")->body, store.export_trial_log({true, stats::Cohort::Trad}));
  EXPECT_EQ(cli.Get("/trial/log?cohort=Nope")->status, 422);
  api.stop();
}
