#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dnayield/core/error.hpp"
#include "dnayield/core/proportion.hpp"
#include "dnayield/core/quantile.hpp"
#include "dnayield/core/text.hpp"
#include "dnayield/stats/glm.hpp"
#include "dnayield/stats/hypothesis.hpp"

namespace dnayield::stats {

enum class Cohort { Trad, SmartPath };
enum class Quality { low, intermediate, high };

inline std::string cohort_name(Cohort c) { return c == Cohort::Trad ? "Trad" : "SmartPath"; }
inline Cohort parse_cohort(std::string_view s) {
  if (s == "Trad") return Cohort::Trad;
  if (s == "SmartPath") return Cohort::SmartPath;
  throw InvalidInput("unknown cohort '" + std::string(s) + "' (expected Trad or SmartPath)");
}

inline std::string quality_name(Quality q) {
  switch (q) {
    case Quality::low: return "low";
    case Quality::intermediate: return "intermediate";
    case Quality::high: return "high";
  }
  return "?";
}
inline Quality parse_quality(std::string_view s) {
  if (s == "low") return Quality::low;
  if (s == "intermediate") return Quality::intermediate;
  if (s == "high") return Quality::high;
  throw InvalidInput("unknown extraction quality '" + std::string(s) + "'");
}

struct TrialRecord {
  std::string sample_id;
  Cohort cohort = Cohort::Trad;
  std::vector<double> dna_masses;  // ng, one per extraction attempt
  int n_slides_first = 1;
  int extraction_count = 1;
  std::optional<double> t_seq_days;  // absent when the sample never reached sequencing
  double tissue_area_mm2 = 0.0;
  Quality extraction_quality = Quality::intermediate;
  std::string procedure;
  std::string pathologist;
  int extraction_day = 0;  // 0 = Monday
  double sample_age_days = 0.0;
  std::string tech_group;

  double first_mass() const { return dna_masses.front(); }

  void validate() const {
    const std::string where = "trial record '" + sample_id + "': ";
    detail::require(!sample_id.empty(), "trial record without sample_id");
    detail::require(!dna_masses.empty(), where + "dna_masses is empty");
    for (double m : dna_masses) detail::require(std::isfinite(m) && m >= 0.0, where + "dna mass must be finite and >= 0");
    detail::require(n_slides_first >= 1, where + "n_slides_first must be >= 1");
    detail::require(extraction_count >= 1, where + "extraction_count must be >= 1");
    if (t_seq_days) detail::require(std::isfinite(*t_seq_days) && *t_seq_days >= 0.0, where + "t_seq_days must be >= 0");
    detail::require(std::isfinite(tissue_area_mm2) && tissue_area_mm2 >= 0.0, where + "tissue_area_mm2 must be >= 0");
    detail::require(extraction_day >= 0 && extraction_day <= 6, where + "extraction_day must be in [0, 6]");
    detail::require(std::isfinite(sample_age_days) && sample_age_days >= 0.0, where + "sample_age_days must be >= 0");
    for (const auto* s : {&sample_id, &procedure, &pathologist, &tech_group})
      detail::require(s->find_first_of(",\n") == std::string::npos, where + "text fields must not contain ',' or newlines");
  }
};

// ---- CSV ------------------------------------------------------------------------------

inline const std::vector<std::string>& trial_columns() {
  static const std::vector<std::string> c = {
      "sample_id",      "cohort",           "dna_masses",         "n_slides_first", "extraction_count",
      "t_seq_days",     "tissue_area_mm2",  "extraction_quality", "procedure",      "pathologist",
      "extraction_day", "sample_age_days",  "tech_group"};
  return c;
}

inline std::string trial_csv_header() {
  std::string s;
  for (const auto& c : trial_columns()) s += (s.empty() ? "" : ",") + c;
  return s;
}

/// One CSV row, no trailing newline.
inline std::string format_trial_row(const TrialRecord& r) {
  r.validate();
  std::string masses;
  for (double m : r.dna_masses) masses += (masses.empty() ? "" : ";") + text::format_double(m);
  return r.sample_id + "," + cohort_name(r.cohort) + "," + masses + "," + std::to_string(r.n_slides_first) + "," +
         std::to_string(r.extraction_count) + "," + (r.t_seq_days ? text::format_double(*r.t_seq_days) : "") + "," +
         text::format_double(r.tissue_area_mm2) + "," + quality_name(r.extraction_quality) + "," + r.procedure + "," +
         r.pathologist + "," + std::to_string(r.extraction_day) + "," + text::format_double(r.sample_age_days) + "," +
         r.tech_group;
}

inline std::string format_trial_csv(std::span<const TrialRecord> records) {
  std::string s = trial_csv_header() + "\n";
  for (const auto& r : records) s += format_trial_row(r) + "\n";
  return s;
}

inline std::vector<TrialRecord> parse_trial_csv(std::string_view body) {
  const auto t = text::parse_csv(body);
  std::vector<int> col;
  for (const auto& c : trial_columns()) col.push_back(t.require_column(c));
  std::vector<TrialRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    auto f = [&](int k) -> const std::string& { return row[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])]; };
    TrialRecord r;
    try {
      r.sample_id = f(0);
      r.cohort = parse_cohort(f(1));
      for (const auto& m : text::split(f(2), ';')) r.dna_masses.push_back(text::to_double(m, "dna_masses"));
      r.n_slides_first = static_cast<int>(text::to_int(f(3), "n_slides_first"));
      r.extraction_count = static_cast<int>(text::to_int(f(4), "extraction_count"));
      if (!f(5).empty()) r.t_seq_days = text::to_double(f(5), "t_seq_days");
      r.tissue_area_mm2 = text::to_double(f(6), "tissue_area_mm2");
      r.extraction_quality = parse_quality(f(7));
      r.procedure = f(8);
      r.pathologist = f(9);
      r.extraction_day = static_cast<int>(text::to_int(f(10), "extraction_day"));
      r.sample_age_days = text::to_double(f(11), "sample_age_days");
      r.tech_group = f(12);
      r.validate();
    } catch (const InvalidInput& e) {
      throw InvalidInput("trial CSV row " + std::to_string(i + 1) + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---- metrics --------------------------------------------------------------------------

enum class RangeOutcome { undershoot, target, overshoot };

/// Target range is inclusive on both ends.
inline RangeOutcome classify_mass(double ng, double lo = 100.0, double hi = 2000.0) {
  if (ng < lo) return RangeOutcome::undershoot;
  if (ng > hi) return RangeOutcome::overshoot;
  return RangeOutcome::target;
}

struct StrataConfig {
  bool by_area = true;
  bool by_quality = true;
  bool crossed = true;
  std::optional<double> area_split;  // default: median tissue area of the records
  double range_lo = 100.0;
  double range_hi = 2000.0;
};

struct CohortSummary {
  std::size_t n = 0;
  Proportion target, undershoot, overshoot;
  double n_slides_mean = std::numeric_limits<double>::quiet_NaN();
  double n_slides_median = std::numeric_limits<double>::quiet_NaN();
  double extraction_mean = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_t_seq = 0;
  double t_seq_mean = std::numeric_limits<double>::quiet_NaN();
};

struct TestOutcome {
  std::string comparison;  // target, undershoot, overshoot, n_slides, t_seq, extraction_count
  std::string test;        // chi2_yates, welch_log, rate_ratio_exact
  bool available = false;
  double statistic = std::numeric_limits<double>::quiet_NaN();
  double dof = std::numeric_limits<double>::quiet_NaN();
  double ratio = std::numeric_limits<double>::quiet_NaN();  // rate-ratio test only
  double p = std::numeric_limits<double>::quiet_NaN();
  std::string note;  // why the test is unavailable
};

struct StratumReport {
  std::string name;
  bool absent = false;
  std::size_t n = 0;
  CohortSummary trad, smartpath;
  std::vector<TestOutcome> tests;

  const TestOutcome& test(std::string_view comparison) const {
    for (const auto& t : tests)
      if (t.comparison == comparison) return t;
    throw InvalidInput("no comparison '" + std::string(comparison) + "'");
  }
};

struct MetricReport {
  double area_split = 0.0;
  std::vector<StratumReport> strata;

  const StratumReport& stratum(std::string_view name) const {
    for (const auto& s : strata)
      if (s.name == name) return s;
    throw InvalidInput("no stratum '" + std::string(name) + "'");
  }
};

namespace impl {

inline CohortSummary summarize(const std::vector<const TrialRecord*>& rs, const StrataConfig& cfg) {
  CohortSummary s;
  s.n = rs.size();
  if (rs.empty()) return s;
  std::size_t u = 0, o = 0, t = 0;
  std::vector<double> slides, ext, tseq;
  for (const auto* r : rs) {
    switch (classify_mass(r->first_mass(), cfg.range_lo, cfg.range_hi)) {
      case RangeOutcome::undershoot: ++u; break;
      case RangeOutcome::overshoot: ++o; break;
      case RangeOutcome::target: ++t; break;
    }
    slides.push_back(r->n_slides_first);
    ext.push_back(r->extraction_count);
    if (r->t_seq_days) tseq.push_back(*r->t_seq_days);
  }
  s.target = normal_ci(t, s.n);
  s.undershoot = normal_ci(u, s.n);
  s.overshoot = normal_ci(o, s.n);
  s.n_slides_mean = mean(slides);
  s.n_slides_median = median(slides);
  s.extraction_mean = mean(ext);
  s.n_t_seq = tseq.size();
  if (!tseq.empty()) s.t_seq_mean = mean(tseq);
  return s;
}

template <class F>
TestOutcome run_test(std::string comparison, std::string test, F&& body) {
  TestOutcome t;
  t.comparison = std::move(comparison);
  t.test = std::move(test);
  try {
    body(t);
    t.available = true;
  } catch (const InvalidInput& e) {
    t.note = e.what();
  }
  return t;
}

inline std::vector<TestOutcome> compare(const std::vector<const TrialRecord*>& trad,
                                        const std::vector<const TrialRecord*>& smart, const StrataConfig& cfg) {
  std::vector<TestOutcome> out;
  const std::pair<const char*, RangeOutcome> classes[] = {{"target", RangeOutcome::target},
                                                          {"undershoot", RangeOutcome::undershoot},
                                                          {"overshoot", RangeOutcome::overshoot}};
  for (const auto& [name, cls] : classes) {
    out.push_back(run_test(name, "chi2_yates", [&, cls = cls](TestOutcome& t) {
      Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(2, 2);
      for (int g = 0; g < 2; ++g)
        for (const auto* r : g == 0 ? smart : trad) {
          const bool in = classify_mass(r->first_mass(), cfg.range_lo, cfg.range_hi) == cls;
          tab(g, in ? 0 : 1) += 1.0;
        }
      const auto c = chi2_contingency(tab);
      t.statistic = c.statistic;
      t.dof = c.dof;
      t.p = c.p;
    }));
  }
  out.push_back(run_test("n_slides", "welch_log", [&](TestOutcome& t) {
    std::vector<double> a, b;
    for (const auto* r : smart) a.push_back(r->n_slides_first);
    for (const auto* r : trad) b.push_back(r->n_slides_first);
    const auto w = welch_t_test(a, b, true);
    t.statistic = w.t;
    t.dof = w.dof;
    t.p = w.p;
  }));
  out.push_back(run_test("t_seq", "welch_log", [&](TestOutcome& t) {
    std::vector<double> a, b;
    for (const auto* r : smart)
      if (r->t_seq_days) a.push_back(*r->t_seq_days);
    for (const auto* r : trad)
      if (r->t_seq_days) b.push_back(*r->t_seq_days);
    const auto w = welch_t_test(a, b, true);
    t.statistic = w.t;
    t.dof = w.dof;
    t.p = w.p;
  }));
  out.push_back(run_test("extraction_count", "rate_ratio_exact", [&](TestOutcome& t) {
    std::vector<long> a, b;
    for (const auto* r : smart) a.push_back(r->extraction_count);
    for (const auto* r : trad) b.push_back(r->extraction_count);
    const auto za = zeroed(a), zb = zeroed(b);
    const auto rr = poisson_rate_ratio_test(za, zb);
    t.ratio = rr.ratio;
    t.statistic = static_cast<double>(rr.sum_a);
    t.p = rr.p;
  }));
  return out;
}

}  // namespace impl

/// Per-cohort summaries and cohort comparisons, overall and per stratum.
/// Comparisons are SmartPath vs Trad (ratios and t are SmartPath first).
inline MetricReport compute_trial_metrics(std::span<const TrialRecord> records, const StrataConfig& cfg = {}) {
  detail::require(cfg.range_lo <= cfg.range_hi, "range_lo must not exceed range_hi");
  // canonical order so that floating-point sums do not depend on input order
  std::vector<const TrialRecord*> rs;
  for (const auto& r : records) {
    r.validate();
    rs.push_back(&r);
  }
  std::sort(rs.begin(), rs.end(), [](auto* a, auto* b) { return a->sample_id < b->sample_id; });
  for (std::size_t i = 1; i < rs.size(); ++i)
    if (rs[i]->sample_id == rs[i - 1]->sample_id) throw InvalidInput("duplicate sample_id '" + rs[i]->sample_id + "'");

  MetricReport rep;
  if (cfg.area_split) {
    rep.area_split = *cfg.area_split;
  } else if (!rs.empty()) {
    std::vector<double> areas;
    for (const auto* r : rs) areas.push_back(r->tissue_area_mm2);
    rep.area_split = median(areas);
  }

  struct Def {
    std::string name;
    int area;  // -1 any, 0 small (<= split), 1 large
    int quality;  // -1 any, else Quality
  };
  std::vector<Def> defs = {{"overall", -1, -1}};
  const char* area_names[] = {"area_small", "area_large"};
  if (cfg.by_area)
    for (int a = 0; a < 2; ++a) defs.push_back({area_names[a], a, -1});
  if (cfg.by_quality)
    for (int q = 0; q < 3; ++q) defs.push_back({"quality_" + quality_name(static_cast<Quality>(q)), -1, q});
  if (cfg.crossed)
    for (int a = 0; a < 2; ++a)
      for (int q = 0; q < 3; ++q)
        defs.push_back({std::string(area_names[a]) + "/quality_" + quality_name(static_cast<Quality>(q)), a, q});

  for (const auto& d : defs) {
    std::vector<const TrialRecord*> trad, smart;
    for (const auto* r : rs) {
      if (d.area >= 0 && (r->tissue_area_mm2 > rep.area_split) != (d.area == 1)) continue;
      if (d.quality >= 0 && static_cast<int>(r->extraction_quality) != d.quality) continue;
      (r->cohort == Cohort::Trad ? trad : smart).push_back(r);
    }
    StratumReport s;
    s.name = d.name;
    s.n = trad.size() + smart.size();
    s.absent = s.n == 0;
    if (!s.absent) {
      s.trad = impl::summarize(trad, cfg);
      s.smartpath = impl::summarize(smart, cfg);
      s.tests = impl::compare(trad, smart, cfg);
    }
    rep.strata.push_back(std::move(s));
  }
  return rep;
}

namespace impl {

inline nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline nlohmann::json prop_json(const Proportion& p) { return {{"value", p.value}, {"ci_lo", p.lo}, {"ci_hi", p.hi}}; }

inline nlohmann::json cohort_json(const CohortSummary& c) {
  return {{"n", c.n},
          {"target", prop_json(c.target)},
          {"undershoot", prop_json(c.undershoot)},
          {"overshoot", prop_json(c.overshoot)},
          {"n_slides_mean", num(c.n_slides_mean)},
          {"n_slides_median", num(c.n_slides_median)},
          {"extraction_count_mean", num(c.extraction_mean)},
          {"n_t_seq", c.n_t_seq},
          {"t_seq_mean", num(c.t_seq_mean)}};
}

}  // namespace impl

inline nlohmann::json metric_report_json(const MetricReport& rep) {
  nlohmann::json j;
  j["area_split_mm2"] = rep.area_split;
  j["strata"] = nlohmann::json::array();
  for (const auto& s : rep.strata) {
    nlohmann::json js = {{"name", s.name}, {"absent", s.absent}, {"n", s.n}};
    if (!s.absent) {
      js["Trad"] = impl::cohort_json(s.trad);
      js["SmartPath"] = impl::cohort_json(s.smartpath);
      nlohmann::json tests = nlohmann::json::array();
      for (const auto& t : s.tests) {
        nlohmann::json jt = {{"comparison", t.comparison}, {"test", t.test}, {"available", t.available}};
        if (t.available) {
          jt["statistic"] = impl::num(t.statistic);
          jt["dof"] = impl::num(t.dof);
          jt["ratio"] = impl::num(t.ratio);
          jt["p"] = impl::num(t.p);
        } else {
          jt["note"] = t.note;
        }
        tests.push_back(jt);
      }
      js["tests"] = tests;
    }
    j["strata"].push_back(js);
  }
  return j;
}

inline std::string format_metric_report(const MetricReport& rep) {
  std::string s = "tissue area split: " + text::format_double(rep.area_split) + " mm2\n";
  char line[256];
  for (const auto& st : rep.strata) {
    if (st.absent) {
      s += "\n[" + st.name + "] absent\n";
      continue;
    }
    s += "\n[" + st.name + "] n = " + std::to_string(st.n) + "\n";
    std::snprintf(line, sizeof line, "  %-10s %5s %16s %16s %16s %7s %7s\n", "cohort", "n", "target", "undershoot",
                  "overshoot", "slides", "T-seq");
    s += line;
    for (const auto& [name, c] : {std::pair<const char*, const CohortSummary&>{"Trad", st.trad}, {"SmartPath", st.smartpath}}) {
      std::snprintf(line, sizeof line, "  %-10s %5zu %6.3f+/-%-7.3f %6.3f+/-%-7.3f %6.3f+/-%-7.3f %7.2f %7.2f\n", name, c.n,
                    c.target.value, (c.target.hi - c.target.lo) / 2, c.undershoot.value,
                    (c.undershoot.hi - c.undershoot.lo) / 2, c.overshoot.value, (c.overshoot.hi - c.overshoot.lo) / 2,
                    c.n_slides_mean, c.t_seq_mean);
      s += line;
    }
    for (const auto& t : st.tests) {
      if (t.available)
        std::snprintf(line, sizeof line, "  %-17s %-17s p = %.4g\n", t.comparison.c_str(), t.test.c_str(), t.p);
      else
        std::snprintf(line, sizeof line, "  %-17s %-17s n/a (%s)\n", t.comparison.c_str(), t.test.c_str(), t.note.c_str());
      s += line;
    }
  }
  return s;
}

// ---- covariate analysis ---------------------------------------------------------------

enum class Outcome { undershoot, log_n_slides, zeroed_extraction_count, log_t_seq };

inline std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::undershoot: return "undershoot";
    case Outcome::log_n_slides: return "log_n_slides";
    case Outcome::zeroed_extraction_count: return "zeroed_extraction_count";
    case Outcome::log_t_seq: return "log_t_seq";
  }
  return "?";
}

inline Outcome parse_outcome(std::string_view s) {
  for (auto o : {Outcome::undershoot, Outcome::log_n_slides, Outcome::zeroed_extraction_count, Outcome::log_t_seq})
    if (outcome_name(o) == s) return o;
  throw InvalidInput("unknown outcome '" + std::string(s) + "'");
}

inline Family family_for(Outcome o) {
  switch (o) {
    case Outcome::undershoot: return Family::binomial_logit;
    case Outcome::log_n_slides: return Family::gaussian_identity;
    case Outcome::zeroed_extraction_count: return Family::poisson_log;
    case Outcome::log_t_seq: return Family::gamma_log;  // log link on T-seq days
  }
  return Family::gaussian_identity;
}

inline const std::vector<std::string>& known_covariates() {
  static const std::vector<std::string> c = {"extraction_quality", "extraction_day", "log_sample_age",
                                             "procedure",          "pathologist",    "tech_group"};
  return c;
}

struct AnalysisDesign {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> names;
  std::vector<std::string> sample_ids;
  Family family = Family::gaussian_identity;
};

/// Design matrix: intercept, cohort (1 = Trad), then the requested
/// covariates in order. Categorical covariates get one indicator per level
/// except the first in sorted order.
inline AnalysisDesign encode_analysis(std::span<const TrialRecord> records, Outcome outcome,
                                      const std::vector<std::string>& covariates) {
  {
    std::set<std::string> seen;
    for (const auto& c : covariates) {
      if (std::find(known_covariates().begin(), known_covariates().end(), c) == known_covariates().end())
        throw InvalidInput("unknown covariate '" + c + "'");
      if (!seen.insert(c).second) throw InvalidInput("covariate '" + c + "' listed twice");
    }
  }
  std::vector<const TrialRecord*> rs;
  for (const auto& r : records) {
    r.validate();
    if (outcome == Outcome::log_t_seq && !r.t_seq_days) continue;
    rs.push_back(&r);
  }
  std::sort(rs.begin(), rs.end(), [](auto* a, auto* b) { return a->sample_id < b->sample_id; });
  detail::require(!rs.empty(), "no records usable for outcome " + outcome_name(outcome));

  AnalysisDesign d;
  d.family = family_for(outcome);
  const auto n = static_cast<Eigen::Index>(rs.size());
  std::vector<Eigen::VectorXd> cols;
  auto add = [&](std::string name, Eigen::VectorXd v) {
    d.names.push_back(std::move(name));
    cols.push_back(std::move(v));
  };
  add("(Intercept)", Eigen::VectorXd::Ones(n));
  {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rs[static_cast<std::size_t>(i)]->cohort == Cohort::Trad ? 1.0 : 0.0;
    add("cohort_trad", v);
  }
  auto level_of = [](const TrialRecord& r, const std::string& cov) -> const std::string& {
    if (cov == "procedure") return r.procedure;
    if (cov == "pathologist") return r.pathologist;
    return r.tech_group;
  };
  for (const auto& cov : covariates) {
    Eigen::VectorXd v(n);
    if (cov == "extraction_quality") {
      for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<double>(rs[static_cast<std::size_t>(i)]->extraction_quality);
      add(cov, v);
    } else if (cov == "extraction_day") {
      for (Eigen::Index i = 0; i < n; ++i) v[i] = rs[static_cast<std::size_t>(i)]->extraction_day;
      add(cov, v);
    } else if (cov == "log_sample_age") {
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = *rs[static_cast<std::size_t>(i)];
        if (!(r.sample_age_days > 0.0))
          throw InvalidInput("log_sample_age needs sample_age_days > 0 (sample '" + r.sample_id + "')");
        v[i] = std::log(r.sample_age_days);
      }
      add(cov, v);
    } else {
      std::set<std::string> levels;
      for (const auto* r : rs) levels.insert(level_of(*r, cov));
      for (auto it = std::next(levels.begin()); it != levels.end(); ++it) {
        for (Eigen::Index i = 0; i < n; ++i) v[i] = level_of(*rs[static_cast<std::size_t>(i)], cov) == *it ? 1.0 : 0.0;
        add(cov + "[" + *it + "]", v);
      }
    }
  }
  d.x.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) d.x.col(static_cast<Eigen::Index>(j)) = cols[j];

  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = *rs[static_cast<std::size_t>(i)];
    d.sample_ids.push_back(r.sample_id);
    switch (outcome) {
      case Outcome::undershoot: d.y[i] = r.first_mass() < 100.0 ? 1.0 : 0.0; break;
      case Outcome::log_n_slides: d.y[i] = std::log(static_cast<double>(r.n_slides_first)); break;
      case Outcome::zeroed_extraction_count: d.y[i] = r.extraction_count - 1; break;
      case Outcome::log_t_seq:
        if (!(*r.t_seq_days > 0.0))
          throw InvalidInput("gamma T-seq model needs t_seq_days > 0 (sample '" + r.sample_id + "')");
        d.y[i] = *r.t_seq_days;
        break;
    }
  }
  return d;
}

inline GLMFit build_analysis(std::span<const TrialRecord> records, Outcome outcome,
                             const std::vector<std::string>& covariates = {}) {
  const auto d = encode_analysis(records, outcome, covariates);
  return glm_fit(d.x, d.y, d.family, std::nullopt, d.names);
}

}  // namespace dnayield::stats
