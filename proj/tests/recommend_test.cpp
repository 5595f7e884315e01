#include <gtest/gtest.h>

#include <cmath>

#include "dnayield/core/random.hpp"
#include "dnayield/recommend/calibration.hpp"
#include "dnayield/recommend/recommendation.hpp"
#include "dnayield/service/synthetic_slides.hpp"

using namespace dnayield;

// ---- slide counts --------------------------------------------------------------

TEST(SlidesForTarget, Examples) {
  EXPECT_EQ(slides_for_target(50, 100), 2);
  EXPECT_EQ(slides_for_target(40, 100), 3);
  EXPECT_EQ(slides_for_target(1000, 100), 1);
  EXPECT_EQ(slides_for_target(100, 100), 1);
  EXPECT_THROW(slides_for_target(0, 100), InvalidInput);
  EXPECT_THROW(slides_for_target(10, -1), InvalidInput);
  EXPECT_THROW(slides_for_target(NAN, 100), InvalidInput);
}

TEST(SlidesForTarget, MonotoneAndSufficient) {
  Rng rng(2);
  for (int i = 0; i < 5000; ++i) {
    const double y = std::exp(rng.uniform(-3, 8)), t = std::exp(rng.uniform(0, 8));
    const auto n = slides_for_target(y, t);
    EXPECT_GE(n, 1);
    EXPECT_GE(static_cast<double>(n) * y, t);
    if (n > 1) {
      EXPECT_LT(static_cast<double>(n - 1) * y, t);  // smallest such count
    }
    EXPECT_LE(slides_for_target(y * 1.3, t), n);
    EXPECT_GE(slides_for_target(y, t * 1.3), n);
  }
}

TEST(Recommendation, CeilArithmeticForPaperTargets) {
  const auto r = recommend_from_predictions(120.0, std::nullopt);
  EXPECT_EQ(r.whole_slide.by_target.at(100.0), 1);
  EXPECT_EQ(r.whole_slide.by_target.at(400.0), 4);
  EXPECT_EQ(r.whole_slide.by_target.at(1000.0), 9);
  EXPECT_FALSE(r.macrodissection.has_value());
}

namespace {

// Yield depends only on the whole-slide total cell count.
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

service::SlideSynthConfig small_config() {
  service::SlideSynthConfig c;
  c.grid_cols = 20;
  c.grid_rows = 16;
  c.tissue_fraction_min = 0.3;
  c.tissue_fraction_max = 0.5;
  return c;
}

}  // namespace

TEST(Recommendation, MacroScopeNeverExceedsWholeSlide) {
  const auto m = count_model();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = service::synthesize_slide(small_config(), seed, "s");
    const auto b = build_recommendation(m, s.inputs);
    ASSERT_TRUE(b.recommendation.tumor_detected());
    EXPECT_LE(*b.recommendation.predicted_yield_macro, b.recommendation.predicted_yield_ws);
    EXPECT_LE(b.macro_features->values[0], b.ws_features.values[0]);
    for (double t : default_targets())
      EXPECT_GE(b.recommendation.macrodissection->by_target.at(t), b.recommendation.whole_slide.by_target.at(t));
  }
}

TEST(Recommendation, PayloadHasThreeTargetsByTwoScopes) {
  const auto s = service::synthesize_slide(small_config(), 9, "slide-9");
  auto r = build_recommendation(count_model(), s.inputs).recommendation;
  const auto j = recommendation_json(r);
  ASSERT_EQ(j["rows"].size(), 2u);
  EXPECT_EQ(j["targets_ng"].size(), 3u);
  for (const auto& row : j["rows"]) {
    EXPECT_FALSE(row["absent"].get<bool>());
    EXPECT_EQ(row["slides"].size(), 3u);
  }
  EXPECT_EQ(j["rows"][0]["scope"], "whole_slide");
  EXPECT_EQ(j["rows"][1]["scope"], "macrodissection");
  EXPECT_EQ(j["model_version"], count_model().version);
  const auto back = parse_recommendation(recommendation_payload(r));
  EXPECT_EQ(recommendation_payload(back), recommendation_payload(r));
}

TEST(Recommendation, NoTumorMarksMacroRowAbsent) {
  auto cfg = small_config();
  cfg.tumor_fraction = 0.0;
  const auto s = service::synthesize_slide(cfg, 4, "s");
  EXPECT_EQ(s.planted.tumor, 0u);
  const auto b = build_recommendation(count_model(), s.inputs);
  EXPECT_FALSE(b.recommendation.tumor_detected());
  const auto j = recommendation_json(b.recommendation);
  EXPECT_TRUE(j["rows"][1]["absent"].get<bool>());
  EXPECT_TRUE(j["predicted_yield_ng_per_slide"]["macrodissection"].is_null());
  const auto back = parse_recommendation(recommendation_payload(b.recommendation));
  EXPECT_FALSE(back.macrodissection.has_value());
}

TEST(Recommendation, DeterministicPayload) {
  const auto s = service::synthesize_slide(small_config(), 12, "s");
  const auto a = build_recommendation(count_model(), s.inputs), b = build_recommendation(count_model(), s.inputs);
  EXPECT_EQ(recommendation_payload(a.recommendation), recommendation_payload(b.recommendation));
}

TEST(Recommendation, FeatureFailureIsStageTagged) {
  features::SlideInputs empty;
  try {
    build_recommendation(count_model(), empty);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_TRUE(e.stage() == "macro_estimate" || e.stage() == "features_ws") << e.stage();
  }
}

// ---- percent success -------------------------------------------------------------

TEST(PercentSuccess, WorkedRecord) {
  const std::vector<CalibrationRecord> r = {{std::log(100.0), 600.0, 5.0}};
  const auto s = simulate_outcome(r[0], 400);
  EXPECT_EQ(s.n_pred, 4.0);
  EXPECT_DOUBLE_EQ(s.y_pred, 480.0);
  EXPECT_EQ(percent_success(r, 400), 1.0);
}

TEST(PercentSuccess, HugeOperatingPointFailsEverything) {
  Rng rng(3);
  std::vector<CalibrationRecord> r;
  for (int i = 0; i < 50; ++i) r.push_back({rng.uniform(2, 7), rng.uniform(0, 3000), double(rng.uniform_int(1, 20))});
  EXPECT_EQ(percent_success(r, 1e300), 0.0);
  EXPECT_EQ(percent_success(r, INFINITY), 0.0);
  EXPECT_THROW(percent_success(std::vector<CalibrationRecord>{}, 100), InvalidInput);
}

namespace {

std::vector<CalibrationRecord> synthetic_records(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<CalibrationRecord> r;
  for (int i = 0; i < n; ++i) {
    const double per_slide = std::exp(rng.normal(4.0, 1.2));
    const double slides = static_cast<double>(rng.uniform_int(1, 15));
    r.push_back({std::log(per_slide) + rng.normal(0, 0.4), per_slide * slides, slides});
  }
  return r;
}

// Record-by-record evaluation written straight from the success definition.
double brute_success(const std::vector<CalibrationRecord>& recs, double op) {
  int ok = 0;
  for (const auto& r : recs) {
    double n = std::ceil(op / std::exp(r.model_pred));
    if (n < 1) n = 1;
    const double y = (n / r.n_true) * r.y_true;
    if (60.0 < y && y < 2000.0 && n < 30.0) ++ok;
  }
  return ok / static_cast<double>(recs.size());
}

}  // namespace

TEST(PercentSuccess, MatchesEnumerationOn332Records) {
  const auto recs = synthetic_records(332, 332);
  for (double op : {100.0, 400.0, 1000.0}) EXPECT_EQ(percent_success(recs, op), brute_success(recs, op)) << op;
}

TEST(Calibration, ModesAccountForEveryRecord) {
  const auto recs = synthetic_records(5, 400);
  std::vector<double> grid;
  for (double op = 25; op <= 5000; op *= 1.25) grid.push_back(op);
  const auto curve = calibrate_operating_points(recs, grid);
  ASSERT_EQ(curve.size(), grid.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& c = curve[i];
    EXPECT_EQ(c.success, percent_success(recs, grid[i]));
    // every failed record is in a named mode or in `other_failure`
    int failed = 0, any_mode = 0;
    for (const auto& r : recs) {
      const auto s = simulate_outcome(r, grid[i]);
      if (is_success(s.n_pred, s.y_pred, {})) continue;
      ++failed;
      any_mode += s.y_pred < 50 || s.n_pred > 25 || (s.y_pred > 2000 && s.n_pred > 5);
    }
    EXPECT_NEAR(c.success + failed / 400.0, 1.0, 1e-12);
    EXPECT_NEAR(c.other_failure, (failed - any_mode) / 400.0, 1e-12);
    EXPECT_LE(c.insufficient + c.waste_slides + c.waste_yield + c.other_failure + c.success, 2.0);
    for (double v : {c.success, c.insufficient, c.waste_slides, c.waste_yield, c.other_failure, c.baseline}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Calibration, FixedPointMatchesBaseline) {
  Rng rng(8);
  const double op = 400;
  std::vector<CalibrationRecord> recs;
  for (int i = 0; i < 200; ++i) {
    const double n = static_cast<double>(rng.uniform_int(1, 40));
    // op / exp(pred) = n - 0.5, so N_pred = N_true
    recs.push_back({std::log(op / (n - 0.5)), rng.uniform(0, 4000), n});
  }
  for (const auto& r : recs) ASSERT_EQ(simulate_outcome(r, op).n_pred, r.n_true);
  const std::vector<double> grid = {op};
  const auto c = calibrate_operating_points(recs, grid);
  EXPECT_EQ(c[0].success, c[0].baseline);
}

TEST(Calibration, CsvRoundTrip) {
  const auto recs = synthetic_records(1, 20);
  const auto back = parse_calibration_records(format_calibration_records(recs));
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].model_pred, recs[i].model_pred);
    EXPECT_EQ(back[i].y_true, recs[i].y_true);
  }
  const std::vector<double> grid = {100, 400};
  const auto csv = format_calibration_csv(calibrate_operating_points(recs, grid));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "op,success,insufficient,waste_slides,waste_yield,baseline,other_failure");
}

// ---- scrape scaling -----------------------------------------------------------------

TEST(Scaling, RoundsSlidesDown) {
  EXPECT_EQ(scaled_slide_count(9, 1.4), 12);
  EXPECT_EQ(scaled_slide_count(2, 1.4), 2);
  EXPECT_EQ(scaled_slide_count(5, 1.4), 7);
  EXPECT_EQ(scaled_slide_count(10, 1.0), 10);
  EXPECT_EQ(scaled_slide_count(3, 2.0), 6);
}

TEST(Scaling, UnitScaleReproducesEmpiricalFractions) {
  Rng rng(17);
  std::vector<ScrapeRecord> recs;
  for (int i = 0; i < 777; ++i) recs.push_back({std::exp(rng.normal(6, 1.3)), static_cast<int>(rng.uniform_int(1, 17))});
  // boundary masses must land identically
  recs.push_back({100.0, 3});
  recs.push_back({2000.0, 7});
  std::size_t in = 0, lo = 0, hi = 0;
  for (const auto& r : recs) (r.y_measured < 100 ? lo : r.y_measured > 2000 ? hi : in)++;
  const auto s = simulate_slide_scaling(recs, 1.0);
  const double n = static_cast<double>(recs.size());
  EXPECT_EQ(s.target.value, in / n);
  EXPECT_EQ(s.undershoot.value, lo / n);
  EXPECT_EQ(s.overshoot.value, hi / n);
}

TEST(Scaling, MonotoneInScale) {
  Rng rng(18);
  std::vector<ScrapeRecord> recs;
  for (int i = 0; i < 500; ++i) recs.push_back({std::exp(rng.normal(5.5, 1.5)), static_cast<int>(rng.uniform_int(1, 12))});
  double prev_under = 2, prev_over = -1;
  for (double sc = 1.0; sc <= 2.0 + 1e-12; sc += 0.05) {
    const auto s = simulate_slide_scaling(recs, std::min(sc, 2.0));
    EXPECT_LE(s.undershoot.value, prev_under);
    EXPECT_GE(s.overshoot.value, prev_over);
    EXPECT_NEAR(s.target.value + s.undershoot.value + s.overshoot.value, 1.0, 1e-12);
    for (const auto& p : {s.target, s.undershoot, s.overshoot}) {
      EXPECT_LE(p.lo, p.value);
      EXPECT_GE(p.hi, p.value);
    }
    prev_under = s.undershoot.value;
    prev_over = s.overshoot.value;
  }
  EXPECT_THROW(simulate_slide_scaling(recs, 2.5), InvalidInput);
}
