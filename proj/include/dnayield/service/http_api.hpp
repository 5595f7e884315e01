#pragma once

// HTTP front end over Store + PipelineRunner. Handlers never wait for a
// pipeline: POST /slides/{id}/run answers 202 with a run id to poll.
//
// Errors are JSON {"error": ...}: 404 unknown slide/run/model, 409 state
// conflicts (no recommendation yet, stale reference), 422 invalid input.

#include <chrono>
#include <ctime>
#include <memory>
#include <string>

#include <json.hpp>

#include "dnayield/service/config.hpp"
#include "dnayield/service/pipeline.hpp"
#include "dnayield/service/store.hpp"

// after Eigen: httplib pulls in <resolv.h>, whose `_res` macro breaks Eigen's product kernels
#include <httplib.h>

namespace dnayield::service {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class ApiServer {
 public:
  ApiServer(Store& store, ServiceConfig cfg = {})
      : store_(store), cfg_(std::move(cfg)), runner_(store_, cfg_.workers, PipelineOptions{cfg_.recommend_options()}) {
    routes();
  }

  ~ApiServer() { stop(); }

  /// Binds to an ephemeral port on `host` and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  /// Serves on the calling thread until stop() is called elsewhere.
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  PipelineRunner& runner() { return runner_; }
  int port() const { return port_; }

 private:
  static void send_json(httplib::Response& res, int status, const nlohmann::json& j) {
    res.status = status;
    res.set_content(j.dump(2) + "\n", "application/json");
  }

  template <class F>
  static httplib::Server::Handler guarded(F&& f) {
    return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const NotFound& e) {
        send_json(res, 404, {{"error", e.what()}});
      } catch (const StateError& e) {
        send_json(res, 409, {{"error", e.what()}});
      } catch (const BundleError& e) {
        send_json(res, 422, {{"error", e.what()}, {"fields", e.fields()}});
      } catch (const InvalidInput& e) {
        send_json(res, 422, {{"error", e.what()}});
      } catch (const nlohmann::json::exception& e) {
        send_json(res, 422, {{"error", std::string("malformed JSON: ") + e.what()}});
      } catch (const std::exception& e) {
        send_json(res, 500, {{"error", e.what()}});
      }
    };
  }

  std::string default_model() const {
    if (!cfg_.model.empty()) return cfg_.model;
    const auto v = store_.model_versions();
    if (v.empty()) throw StateError("no model in store; fit and register one first");
    return v.back();
  }

  void routes() {
    server_.Get("/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}, {"slides", store_.slide_ids().size()}, {"models", store_.model_versions()}});
    }));

    server_.Post("/slides", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!req.is_multipart_form_data()) throw InvalidInput("POST /slides expects multipart/form-data");
      SlideBundle b;
      auto part = [&](const char* name) -> std::optional<std::string> {
        if (!req.has_file(name)) return std::nullopt;
        return req.get_file_value(name).content;
      };
      b.tile_map = part("tile_map");
      b.general_cells = part("general_cells");
      b.lymph_cells = part("lymph_cells");
      b.image = part("image");
      if (auto m = part("metadata")) b.metadata = parse_metadata(*m);
      const bool existed = [&] {
        try {
          return store_.has_slide(slide_id_for_hash(bundle_content_hash(b)));
        } catch (...) {
          return false;
        }
      }();
      const auto id = store_.ingest(b);
      send_json(res, existed ? 200 : 201, {{"slide_id", id}});
    }));

    server_.Post("/slides/:id/run", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      std::string model = "";
      std::uint64_t seed = cfg_.seed;
      if (!req.body.empty()) {
        const auto j = nlohmann::json::parse(req.body);
        model = j.value("model_version", std::string());
        seed = j.value("seed", seed);
      }
      if (!store_.has_slide(id)) throw NotFound("slide '" + id + "' not in store");
      if (model.empty()) model = default_model();
      const auto run_id = runner_.submit(id, model, seed);
      send_json(res, 202, {{"run_id", run_id}, {"status", "queued"}, {"poll", "/runs/" + run_id}});
    }));

    server_.Get("/runs/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto r = store_.run(req.path_params.at("id"));
      if (!r) throw NotFound("run '" + req.path_params.at("id") + "' not found");
      send_json(res, 200, run_json(*r));
    }));

    server_.Get("/slides/:id/recommendation", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      const auto run = completed_run(id);
      res.status = 200;
      res.set_header("ETag", "\"" + run.recommendation_ref + "\"");
      res.set_header("X-Recommendation-Ref", run.recommendation_ref);
      res.set_content(store_.get_blob(run.recommendation_ref), "application/json");
    }));

    server_.Get("/slides/:id/macro-mask", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto run = completed_run(req.path_params.at("id"));
      const auto& a = run.artifacts;
      res.status = 200;
      const auto meta = text::parse_key_values(store_.get_blob(a.at("macro_mask_meta")));
      res.set_header("X-Magnification", meta.at("magnification"));
      res.set_header("X-Pixel-Pitch", meta.at("pixel_pitch"));
      res.set_content(store_.get_blob(a.at("macro_mask")), "image/x-portable-graymap");
    }));

    server_.Post("/slides/:id/decision", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      auto d = decision_from_json(nlohmann::json::parse(req.body));
      if (!d.slide_id.empty() && d.slide_id != id) throw InvalidInput("slide_id in body does not match the URL");
      d.slide_id = id;
      if (d.decided_at.empty()) d.decided_at = utc_timestamp();
      send_json(res, 201, stored_decision_json(store_.record_decision(d)));
    }));

    server_.Get("/slides/:id/decisions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      if (!store_.has_slide(id)) throw NotFound("slide '" + id + "' not in store");
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& s : store_.decisions(id)) arr.push_back(stored_decision_json(s));
      send_json(res, 200, arr);
    }));

    server_.Get("/trial/log", guarded([this](const httplib::Request& req, httplib::Response& res) {
      res.status = 200;
      res.set_content(store_.export_trial_log(filter_from(req)), "text/csv");
    }));

    server_.Get("/trial/metrics", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto recs = store_.trial_records(filter_from(req));
      if (recs.empty()) throw StateError("no trial outcomes recorded yet");
      send_json(res, 200, stats::metric_report_json(stats::compute_trial_metrics(recs, cfg_.strata)));
    }));
  }

  static TrialLogFilter filter_from(const httplib::Request& req) {
    TrialLogFilter f;
    if (req.has_param("complete_only")) f.complete_only = impl::parse_bool(req.get_param_value("complete_only"), "complete_only");
    if (req.has_param("cohort")) f.cohort = stats::parse_cohort(req.get_param_value("cohort"));
    return f;
  }

  PipelineRun completed_run(const std::string& id) const {
    if (!store_.has_slide(id)) throw NotFound("slide '" + id + "' not in store");
    const auto run = store_.latest_run(id);
    if (!run) throw StateError("slide '" + id + "' has no completed recommendation yet");
    return *run;
  }

  Store& store_;
  ServiceConfig cfg_;
  PipelineRunner runner_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace dnayield::service
