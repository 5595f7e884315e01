#pragma once

// File-backed store: content-addressed blobs under blobs/ plus an
// append-only index.jsonl of events. Opening a store replays the index;
// nothing on disk is ever rewritten in place.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dnayield/core/error.hpp"
#include "dnayield/core/hash.hpp"
#include "dnayield/core/text.hpp"
#include "dnayield/model/yield_model.hpp"
#include "dnayield/recommend/recommendation.hpp"
#include "dnayield/service/bundle.hpp"
#include "dnayield/stats/trial.hpp"

namespace dnayield::service {

/// Request is well formed but conflicts with stored state (no
/// recommendation yet, stale reference, unknown slide).
class StateError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class NotFound : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// ---- pipeline runs ------------------------------------------------------------------

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> s = {"ingest",      "macro_estimate", "features_ws",
                                             "features_macro", "predict",     "recommend"};
  return s;
}

struct StageRecord {
  std::string name;
  std::string status = "pending";  // pending, ok, skipped, failed
  double duration_ms = 0.0;
  std::string detail;
};

struct PipelineRun {
  std::string run_id;
  std::string slide_id;
  std::string model_version;
  std::uint64_t seed = 0;
  std::string status = "queued";  // queued, running, succeeded, failed
  std::vector<StageRecord> stages;
  std::string recommendation_ref;  // blob holding the payload
  std::map<std::string, std::string> artifacts;  // name -> blob

  bool succeeded() const { return status == "succeeded"; }
};

inline nlohmann::json run_json(const PipelineRun& r) {
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : r.stages)
    st.push_back({{"name", s.name}, {"status", s.status}, {"duration_ms", s.duration_ms}, {"detail", s.detail}});
  return {{"run_id", r.run_id},   {"slide_id", r.slide_id}, {"model_version", r.model_version},
          {"seed", r.seed},       {"status", r.status},     {"stages", st},
          {"recommendation_ref", r.recommendation_ref},     {"artifacts", r.artifacts}};
}

inline PipelineRun run_from_json(const nlohmann::json& j) {
  PipelineRun r;
  r.run_id = j.at("run_id");
  r.slide_id = j.at("slide_id");
  r.model_version = j.at("model_version");
  r.seed = j.at("seed");
  r.status = j.at("status");
  for (const auto& s : j.at("stages"))
    r.stages.push_back({s.at("name"), s.at("status"), s.at("duration_ms"), s.at("detail")});
  r.recommendation_ref = j.at("recommendation_ref");
  r.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
  return r;
}

// ---- review decisions ---------------------------------------------------------------

enum class RejectionReason { clinical, model_performance };

inline std::string reason_name(RejectionReason r) { return r == RejectionReason::clinical ? "clinical" : "model_performance"; }
inline RejectionReason parse_reason(std::string_view s) {
  if (s == "clinical") return RejectionReason::clinical;
  if (s == "model_performance") return RejectionReason::model_performance;
  throw InvalidInput("rejection_reason must be clinical or model_performance");
}

struct ReviewDecision {
  std::string slide_id;
  bool accepted = false;
  std::optional<double> chosen_target;  // ng
  bool deviation = false;               // pathologist marked their own area
  std::optional<RejectionReason> rejection_reason;
  std::string pathologist_id;
  std::string decided_at;
  std::optional<std::string> scope;               // whole_slide or macrodissection
  std::optional<std::string> recommendation_ref;  // optimistic concurrency check

  void validate() const {
    detail::require(!slide_id.empty(), "decision without slide_id");
    detail::require(!pathologist_id.empty(), "decision without pathologist_id");
    if (accepted) {
      detail::require(chosen_target.has_value(), "accepted decision needs chosen_target");
    } else {
      detail::require(rejection_reason.has_value(), "rejected decision needs rejection_reason");
      detail::require(!chosen_target, "rejected decision must not carry chosen_target");
    }
    if (scope) detail::require(*scope == "whole_slide" || *scope == "macrodissection", "scope must be whole_slide or macrodissection");
    for (const auto* s : {&pathologist_id, &decided_at})
      detail::require(s->find_first_of(",\n") == std::string::npos, "decision text fields must not contain ',' or newlines");
  }
};

struct StoredDecision {
  ReviewDecision decision;
  std::size_t sequence = 0;  // global append order
  std::string recommendation_ref;
  std::string model_version;
  std::string scope;
  std::optional<std::int64_t> chosen_slide_count;
  bool current = false;
};

inline ReviewDecision decision_from_json(const nlohmann::json& j) {
  try {
    ReviewDecision d;
    d.slide_id = j.value("slide_id", std::string());
    d.accepted = j.at("accepted").get<bool>();
    if (j.contains("chosen_target") && !j["chosen_target"].is_null()) d.chosen_target = j["chosen_target"].get<double>();
    d.deviation = j.value("deviation", false);
    if (j.contains("rejection_reason") && !j["rejection_reason"].is_null())
      d.rejection_reason = parse_reason(j["rejection_reason"].get<std::string>());
    d.pathologist_id = j.value("pathologist_id", std::string());
    d.decided_at = j.value("decided_at", std::string());
    if (j.contains("scope") && !j["scope"].is_null()) d.scope = j["scope"].get<std::string>();
    if (j.contains("recommendation_ref") && !j["recommendation_ref"].is_null())
      d.recommendation_ref = j["recommendation_ref"].get<std::string>();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("decision schema: ") + e.what());
  }
}

inline nlohmann::json decision_json(const ReviewDecision& d) {
  return {{"slide_id", d.slide_id},
          {"accepted", d.accepted},
          {"chosen_target", d.chosen_target ? nlohmann::json(*d.chosen_target) : nlohmann::json()},
          {"deviation", d.deviation},
          {"rejection_reason", d.rejection_reason ? nlohmann::json(reason_name(*d.rejection_reason)) : nlohmann::json()},
          {"pathologist_id", d.pathologist_id},
          {"decided_at", d.decided_at},
          {"scope", d.scope ? nlohmann::json(*d.scope) : nlohmann::json()},
          {"recommendation_ref", d.recommendation_ref ? nlohmann::json(*d.recommendation_ref) : nlohmann::json()}};
}

inline nlohmann::json stored_decision_json(const StoredDecision& s) {
  auto j = decision_json(s.decision);
  j["sequence"] = s.sequence;
  j["recommendation_ref"] = s.recommendation_ref;
  j["model_version"] = s.model_version;
  j["scope"] = s.scope;
  j["chosen_slide_count"] = s.chosen_slide_count ? nlohmann::json(*s.chosen_slide_count) : nlohmann::json();
  j["current"] = s.current;
  return j;
}

// ---- trial log --------------------------------------------------------------------------

struct TrialLogFilter {
  bool complete_only = false;  // only rows with a recorded downstream outcome
  std::optional<stats::Cohort> cohort;
};

inline const std::vector<std::string>& decision_log_columns() {
  static const std::vector<std::string> c = {"decision_accepted", "chosen_target_ng", "chosen_slide_count",
                                             "scope",             "deviation",        "rejection_reason",
                                             "decided_by",        "model_version",    "recommendation_ref"};
  return c;
}

// ---- store ----------------------------------------------------------------------------------

class Store {
 public:
  explicit Store(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_ / "blobs");
    const auto idx = root_ / "index.jsonl";
    if (std::filesystem::exists(idx)) {
      std::ifstream in(idx);
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
          apply(nlohmann::json::parse(line));
        } catch (const std::exception& e) {
          throw IoError(idx.string() + " line " + std::to_string(lineno) + ": " + e.what());
        }
      }
    }
  }

  const std::filesystem::path& root() const { return root_; }

  // -- blobs

  std::string put_blob(std::string_view bytes) {
    const auto sha = sha256_hex(bytes);
    const auto p = blob_path(sha);
    if (!std::filesystem::exists(p)) {
      std::filesystem::create_directories(p.parent_path());
      const auto tmp = p.string() + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
      text::write_file(tmp, bytes);
      std::filesystem::rename(tmp, p);
    }
    return sha;
  }

  std::string get_blob(const std::string& sha) const {
    if (sha.size() != 64 || sha.find_first_not_of("0123456789abcdef") != std::string::npos)
      throw NotFound("malformed blob reference '" + sha + "'");
    const auto p = blob_path(sha);
    if (!std::filesystem::exists(p)) throw NotFound("blob " + sha + " not found");
    return text::read_file(p.string());
  }

  // -- bundles

  /// Validates, persists and returns the content-derived slide id. Ingesting
  /// the same bytes again returns the same id and writes nothing.
  std::string ingest(const SlideBundle& bundle) {
    parse_bundle(bundle);  // throws BundleError with every failing field
    const auto hash = bundle_content_hash(bundle);
    const auto id = slide_id_for_hash(hash);
    {
      std::shared_lock lk(mu_);
      if (bundles_.count(id)) return id;
    }
    nlohmann::json parts = nlohmann::json::object();
    auto put = [&](const char* name, const std::optional<std::string>& bytes) {
      if (bytes) parts[name] = put_blob(*bytes);
    };
    put("tile_map", bundle.tile_map);
    put("general_cells", bundle.general_cells);
    put("lymph_cells", bundle.lymph_cells);
    put("image", bundle.image);
    parts["metadata"] = put_blob(format_metadata(bundle.metadata));
    std::unique_lock lk(mu_);
    if (bundles_.count(id)) return id;
    commit({{"kind", "bundle"}, {"slide_id", id}, {"hash", hash}, {"parts", parts}});
    return id;
  }

  bool has_slide(const std::string& id) const {
    std::shared_lock lk(mu_);
    return bundles_.count(id) > 0;
  }

  std::vector<std::string> slide_ids() const {
    std::shared_lock lk(mu_);
    std::vector<std::string> out;
    for (const auto& [id, b] : bundles_) out.push_back(id);
    return out;
  }

  std::string bundle_hash(const std::string& id) const {
    std::shared_lock lk(mu_);
    return bundle_entry(id).hash;
  }

  SlideBundle load_bundle(const std::string& id) const {
    BundleEntry e;
    {
      std::shared_lock lk(mu_);
      e = bundle_entry(id);
    }
    SlideBundle b;
    b.slide_id = id;
    auto get = [&](const char* name) -> std::optional<std::string> {
      const auto it = e.parts.find(name);
      if (it == e.parts.end()) return std::nullopt;
      return get_blob(it->second);
    };
    b.tile_map = get("tile_map");
    b.general_cells = get("general_cells");
    b.lymph_cells = get("lymph_cells");
    b.image = get("image");
    b.metadata = parse_metadata(*get("metadata"));
    return b;
  }

  // -- models

  std::string put_model(const YieldModel& m) {
    const auto text_form = serialize_model(m);
    const auto version = model_version_of(m);
    const auto blob = put_blob(text_form);
    std::unique_lock lk(mu_);
    if (!models_.count(version)) commit({{"kind", "model"}, {"version", version}, {"blob", blob}});
    return version;
  }

  YieldModel load_model(const std::string& version) const {
    std::string blob;
    {
      std::shared_lock lk(mu_);
      const auto it = models_.find(version);
      if (it == models_.end()) throw NotFound("model version '" + version + "' not in store");
      blob = it->second;
    }
    auto m = deserialize_model(get_blob(blob));
    m.version = version;
    return m;
  }

  std::vector<std::string> model_versions() const {
    std::shared_lock lk(mu_);
    std::vector<std::string> out;
    for (const auto& v : model_order_) out.push_back(v);
    return out;
  }

  // -- runs

  std::string new_run_id(const std::string& slide_id, const std::string& model_version, std::uint64_t seed) {
    std::unique_lock lk(mu_);
    const auto n = run_counter_++;
    return "run-" + sha256_hex(slide_id + "|" + model_version + "|" + std::to_string(seed) + "|" + std::to_string(n) +
                               "|" + std::to_string(runs_.size()))
                        .substr(0, 16);
  }

  void put_run(const PipelineRun& r) {
    std::unique_lock lk(mu_);
    commit({{"kind", "run"}, {"run", run_json(r)}});
  }

  std::optional<PipelineRun> run(const std::string& run_id) const {
    std::shared_lock lk(mu_);
    const auto it = runs_.find(run_id);
    if (it == runs_.end()) return std::nullopt;
    return it->second;
  }

  /// Most recent successful run for the slide.
  std::optional<PipelineRun> latest_run(const std::string& slide_id) const {
    std::shared_lock lk(mu_);
    const auto it = latest_ok_.find(slide_id);
    if (it == latest_ok_.end()) return std::nullopt;
    return runs_.at(it->second);
  }

  std::optional<std::string> recommendation_payload(const std::string& slide_id) const {
    const auto r = latest_run(slide_id);
    if (!r) return std::nullopt;
    return get_blob(r->recommendation_ref);
  }

  // -- decisions

  StoredDecision record_decision(const ReviewDecision& d) {
    d.validate();
    if (!has_slide(d.slide_id)) throw NotFound("slide '" + d.slide_id + "' not in store");
    const auto run = latest_run(d.slide_id);
    if (!run) throw StateError("slide '" + d.slide_id + "' has no completed recommendation yet");
    if (d.recommendation_ref && *d.recommendation_ref != run->recommendation_ref)
      throw StateError("stale recommendation reference: current is " + run->recommendation_ref);
    const auto rec = parse_recommendation(get_blob(run->recommendation_ref));

    StoredDecision s;
    s.decision = d;
    s.recommendation_ref = run->recommendation_ref;
    s.model_version = rec.model_version;
    s.scope = d.scope ? *d.scope : (rec.macrodissection ? "macrodissection" : "whole_slide");
    if (s.scope == "macrodissection" && !rec.macrodissection)
      throw InvalidInput("no macrodissection recommendation for this slide (no tumor detected)");
    if (d.accepted) {
      const auto& counts = s.scope == "macrodissection" ? rec.macrodissection->by_target : rec.whole_slide.by_target;
      for (const auto& [t, n] : counts)
        if (std::abs(t - *d.chosen_target) <= 1e-9 * std::max(1.0, std::abs(t))) s.chosen_slide_count = n;
      if (!s.chosen_slide_count) throw InvalidInput("chosen_target is not one of the recommended targets");
    }
    std::unique_lock lk(mu_);
    s.sequence = next_sequence_;
    commit({{"kind", "decision"}, {"stored", stored_decision_json(s)}});
    s.current = true;
    return s;
  }

  /// All decisions for the slide in recording order; the last is current.
  std::vector<StoredDecision> decisions(const std::string& slide_id) const {
    std::shared_lock lk(mu_);
    std::vector<StoredDecision> out;
    const auto it = decisions_.find(slide_id);
    if (it == decisions_.end()) return out;
    out = it->second;
    for (std::size_t i = 0; i < out.size(); ++i) out[i].current = i + 1 == out.size();
    return out;
  }

  // -- downstream outcomes

  /// Latest record per sample_id wins; history stays in the index.
  void record_outcome(const stats::TrialRecord& r) {
    r.validate();
    nlohmann::json j = {{"kind", "outcome"}, {"csv_row", stats::format_trial_row(r)}};
    std::unique_lock lk(mu_);
    commit(j);
  }

  std::vector<stats::TrialRecord> trial_records(const TrialLogFilter& f = {}) const {
    std::shared_lock lk(mu_);
    std::vector<stats::TrialRecord> out;
    for (const auto& [id, r] : outcomes_)
      if (!f.cohort || r.cohort == *f.cohort) out.push_back(r);
    return out;
  }

  /// TrialRecord columns followed by the current review decision, one row
  /// per sample_id in sorted order.
  std::string export_trial_log(const TrialLogFilter& f = {}) const {
    std::shared_lock lk(mu_);
    std::string s = stats::trial_csv_header();
    for (const auto& c : decision_log_columns()) s += "," + c;
    s += "\n";
    std::set<std::string> ids;
    for (const auto& [id, r] : outcomes_) ids.insert(id);
    if (!f.complete_only)
      for (const auto& [id, d] : decisions_) ids.insert(id);
    for (const auto& id : ids) {
      const auto o = outcomes_.find(id);
      if (f.cohort && (o == outcomes_.end() || o->second.cohort != *f.cohort)) continue;
      std::string row;
      if (o != outcomes_.end()) {
        row = stats::format_trial_row(o->second);
      } else {
        row = id + std::string(stats::trial_columns().size() - 1, ',');
      }
      const auto d = decisions_.find(id);
      if (d == decisions_.end() || d->second.empty()) {
        row += std::string(decision_log_columns().size(), ',');
      } else {
        const auto& c = d->second.back();
        const auto& dec = c.decision;
        row += std::string(",") + (dec.accepted ? "true" : "false") + "," +
               (dec.chosen_target ? text::format_double(*dec.chosen_target) : "") + "," +
               (c.chosen_slide_count ? std::to_string(*c.chosen_slide_count) : "") + "," + c.scope + "," +
               (dec.deviation ? "true" : "false") + "," + (dec.rejection_reason ? reason_name(*dec.rejection_reason) : "") +
               "," + dec.pathologist_id + "," + c.model_version + "," + c.recommendation_ref;
      }
      s += row + "\n";
    }
    return s;
  }

 private:
  struct BundleEntry {
    std::string hash;
    std::map<std::string, std::string> parts;
  };

  std::filesystem::path blob_path(const std::string& sha) const { return root_ / "blobs" / sha.substr(0, 2) / sha; }

  const BundleEntry& bundle_entry(const std::string& id) const {
    const auto it = bundles_.find(id);
    if (it == bundles_.end()) throw NotFound("slide '" + id + "' not in store");
    return it->second;
  }

  // caller holds the unique lock
  void commit(const nlohmann::json& event) {
    std::ofstream out(root_ / "index.jsonl", std::ios::app | std::ios::binary);
    out << event.dump() << "\n";
    out.flush();
    if (!out) throw IoError("cannot append to " + (root_ / "index.jsonl").string());
    apply(event);
  }

  void apply(const nlohmann::json& e) {
    const std::string kind = e.at("kind");
    if (kind == "bundle") {
      bundles_[e.at("slide_id")] = {e.at("hash"), e.at("parts").get<std::map<std::string, std::string>>()};
    } else if (kind == "model") {
      const std::string v = e.at("version");
      if (!models_.count(v)) model_order_.push_back(v);
      models_[v] = e.at("blob");
    } else if (kind == "run") {
      auto r = run_from_json(e.at("run"));
      if (r.succeeded()) latest_ok_[r.slide_id] = r.run_id;
      runs_[r.run_id] = std::move(r);
      ++run_counter_;
    } else if (kind == "decision") {
      const auto& j = e.at("stored");
      StoredDecision s;
      s.decision = decision_from_json(j);
      s.sequence = j.at("sequence");
      s.recommendation_ref = j.at("recommendation_ref");
      s.decision.recommendation_ref = s.recommendation_ref;
      s.model_version = j.at("model_version");
      s.scope = j.at("scope");
      if (!j.at("chosen_slide_count").is_null()) s.chosen_slide_count = j.at("chosen_slide_count").get<std::int64_t>();
      decisions_[s.decision.slide_id].push_back(s);
      next_sequence_ = std::max(next_sequence_, s.sequence + 1);
    } else if (kind == "outcome") {
      const auto recs = stats::parse_trial_csv(stats::trial_csv_header() + "\n" + e.at("csv_row").get<std::string>() + "\n");
      outcomes_[recs.front().sample_id] = recs.front();
    } else {
      throw IoError("unknown index event kind '" + kind + "'");
    }
  }

  std::filesystem::path root_;
  mutable std::shared_mutex mu_;
  std::map<std::string, BundleEntry> bundles_;
  std::map<std::string, std::string> models_;
  std::vector<std::string> model_order_;
  std::map<std::string, PipelineRun> runs_;
  std::map<std::string, std::string> latest_ok_;
  std::map<std::string, std::vector<StoredDecision>> decisions_;
  std::map<std::string, stats::TrialRecord> outcomes_;
  std::size_t next_sequence_ = 0;
  std::uint64_t run_counter_ = 0;
};

}  // namespace dnayield::service
