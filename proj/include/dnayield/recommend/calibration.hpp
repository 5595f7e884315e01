#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dnayield/core/error.hpp"
#include "dnayield/core/proportion.hpp"
#include "dnayield/core/text.hpp"

namespace dnayield {

struct SuccessConstraints {
  double yield_min = 60.0;   // ng
  double yield_max = 2000.0;  // ng
  double max_slides = 30.0;

  void validate() const {
    detail::require(yield_min > 0.0 && yield_min < yield_max, "constraints need 0 < yield_min < yield_max");
    detail::require(max_slides >= 1.0, "constraints need max_slides >= 1");
  }
};

/// A validation sample: model output in log space, measured first-attempt
/// mass and the slides actually scraped.
struct CalibrationRecord {
  double model_pred = 0.0;  // ln(ng per slide)
  double y_true = 0.0;      // ng
  double n_true = 1.0;      // slides
};

struct SimulatedOutcome {
  double n_pred = 0.0;
  double y_pred = 0.0;
};

/// N_pred = ceil(op / exp(pred)), at least 1; Y_pred scales the measured
/// mass by N_pred / N_true. Kept in doubles so huge ops saturate instead of
/// overflowing an integer.
inline SimulatedOutcome simulate_outcome(const CalibrationRecord& r, double op) {
  const double per_slide = std::exp(r.model_pred);
  double n = std::ceil(op / per_slide);
  if (!(n >= 1.0)) n = std::isnan(n) ? INFINITY : 1.0;
  return {n, n / r.n_true * r.y_true};
}

inline bool is_success(double n, double y, const SuccessConstraints& c) {
  return c.yield_min < y && y < c.yield_max && n < c.max_slides;
}

inline void validate_records(std::span<const CalibrationRecord> records) {
  detail::require(!records.empty(), "no calibration records");
  for (const auto& r : records) {
    detail::require(r.n_true >= 1.0, "calibration record has N_true < 1");
    detail::require(r.y_true >= 0.0, "calibration record has negative yield");
    detail::require(std::isfinite(r.model_pred), "calibration record has a non-finite prediction");
  }
}

inline double percent_success(std::span<const CalibrationRecord> records, double op,
                              const SuccessConstraints& c = {}) {
  validate_records(records);
  c.validate();
  detail::require(op > 0.0, "operating point must be positive");
  std::size_t ok = 0;
  for (const auto& r : records) {
    const auto s = simulate_outcome(r, op);
    ok += is_success(s.n_pred, s.y_pred, c);
  }
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

/// Thresholds for the three named failure modes.
struct FailureThresholds {
  double insufficient_below = 50.0;  // ng
  double waste_slides_above = 25.0;  // slides
  double waste_yield_above = 2000.0; // ng, together with
  double waste_yield_slides_above = 5.0;
};

struct CalibrationPoint {
  double op = 0.0;
  double success = 0.0;
  double insufficient = 0.0;
  double waste_slides = 0.0;
  double waste_yield = 0.0;
  double other_failure = 0.0;  // failed but matches none of the named modes
  double baseline = 0.0;       // success of the measured (Y_true, N_true) pairs
};

inline std::vector<CalibrationPoint> calibrate_operating_points(std::span<const CalibrationRecord> records,
                                                                std::span<const double> op_grid,
                                                                const SuccessConstraints& c = {},
                                                                const FailureThresholds& f = {}) {
  detail::require(!op_grid.empty(), "operating-point grid is empty");
  validate_records(records);
  c.validate();
  const double n = static_cast<double>(records.size());
  std::size_t base = 0;
  for (const auto& r : records) base += is_success(r.n_true, r.y_true, c);
  std::vector<CalibrationPoint> out;
  for (double op : op_grid) {
    detail::require(op > 0.0, "operating point must be positive");
    std::size_t ok = 0, insuf = 0, wslides = 0, wyield = 0, other = 0;
    for (const auto& r : records) {
      const auto s = simulate_outcome(r, op);
      if (is_success(s.n_pred, s.y_pred, c)) {
        ++ok;
        continue;
      }
      const bool a = s.y_pred < f.insufficient_below;
      const bool b = s.n_pred > f.waste_slides_above;
      const bool d = s.y_pred > f.waste_yield_above && s.n_pred > f.waste_yield_slides_above;
      insuf += a;
      wslides += b;
      wyield += d;
      other += !(a || b || d);
    }
    out.push_back({op, ok / n, insuf / n, wslides / n, wyield / n, other / n, base / n});
  }
  return out;
}

inline std::string format_calibration_csv(std::span<const CalibrationPoint> pts) {
  std::string s = "op,success,insufficient,waste_slides,waste_yield,baseline,other_failure\n";
  for (const auto& p : pts)
    s += text::format_double(p.op) + "," + text::format_double(p.success) + "," +
         text::format_double(p.insufficient) + "," + text::format_double(p.waste_slides) + "," +
         text::format_double(p.waste_yield) + "," + text::format_double(p.baseline) + "," +
         text::format_double(p.other_failure) + "\n";
  return s;
}

/// CSV columns: model_pred,y_true,n_true.
inline std::vector<CalibrationRecord> parse_calibration_records(std::string_view body) {
  const auto t = text::parse_csv(body);
  const int cp = t.require_column("model_pred"), cy = t.require_column("y_true"), cn = t.require_column("n_true");
  std::vector<CalibrationRecord> out;
  for (const auto& row : t.rows)
    out.push_back({text::to_double(row[static_cast<std::size_t>(cp)], "model_pred"),
                   text::to_double(row[static_cast<std::size_t>(cy)], "y_true"),
                   text::to_double(row[static_cast<std::size_t>(cn)], "n_true")});
  return out;
}

inline std::string format_calibration_records(std::span<const CalibrationRecord> recs) {
  std::string s = "model_pred,y_true,n_true\n";
  for (const auto& r : recs)
    s += text::format_double(r.model_pred) + "," + text::format_double(r.y_true) + "," + text::format_double(r.n_true) + "\n";
  return s;
}

// ---- scrape-scaling simulation -------------------------------------------------

struct ScrapeRecord {
  double y_measured = 0.0;  // ng
  int n_actual = 1;
};

/// Hypothetical slide count; fractional slides are dropped.
inline int scaled_slide_count(int n_actual, double scale) {
  // the small guard keeps products such as 5 x 1.4 from landing just under 7
  return static_cast<int>(std::floor(static_cast<double>(n_actual) * scale + 1e-9));
}

struct ScalingResult {
  double scale = 1.0;
  Proportion target;
  Proportion undershoot;
  Proportion overshoot;
};

inline ScalingResult simulate_slide_scaling(std::span<const ScrapeRecord> records, double scale, double range_lo = 100.0,
                                            double range_hi = 2000.0) {
  detail::require(scale >= 1.0 && scale <= 2.0, "scale must be in [1, 2]");
  detail::require(range_lo <= range_hi, "range_lo must not exceed range_hi");
  std::size_t in = 0, below = 0, above = 0;
  for (const auto& r : records) {
    detail::require(r.n_actual >= 1, "scrape record has fewer than one slide");
    const int nh = scaled_slide_count(r.n_actual, scale);
    // ratio first, so scale 1 multiplies by exactly 1.0
    const double y = r.y_measured * (static_cast<double>(nh) / static_cast<double>(r.n_actual));
    if (y < range_lo)
      ++below;
    else if (y > range_hi)
      ++above;
    else
      ++in;
  }
  const std::size_t n = records.size();
  return {scale, normal_ci(in, n), normal_ci(below, n), normal_ci(above, n)};
}

/// CSV columns: y_measured,n_actual.
inline std::vector<ScrapeRecord> parse_scrape_records(std::string_view body) {
  const auto t = text::parse_csv(body);
  const int cy = t.require_column("y_measured"), cn = t.require_column("n_actual");
  std::vector<ScrapeRecord> out;
  for (const auto& row : t.rows)
    out.push_back({text::to_double(row[static_cast<std::size_t>(cy)], "y_measured"),
                   static_cast<int>(text::to_int(row[static_cast<std::size_t>(cn)], "n_actual"))});
  return out;
}

inline std::string format_scaling_csv(std::span<const ScalingResult> rs) {
  std::string s = "scale,target,target_lo,target_hi,undershoot,undershoot_lo,undershoot_hi,overshoot,overshoot_lo,overshoot_hi\n";
  for (const auto& r : rs) {
    s += text::format_double(r.scale);
    for (const auto* p : {&r.target, &r.undershoot, &r.overshoot})
      s += "," + text::format_double(p->value) + "," + text::format_double(p->lo) + "," + text::format_double(p->hi);
    s += "\n";
  }
  return s;
}

}  // namespace dnayield
