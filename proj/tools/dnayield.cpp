// dnayield command line: store operations, model fitting, calibration,
// trial statistics and the HTTP service.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "dnayield/model/sweep.hpp"
#include "dnayield/recommend/calibration.hpp"
#include "dnayield/recommend/recommendation.hpp"
#include "dnayield/service/config.hpp"
#include "dnayield/service/pipeline.hpp"
#include "dnayield/service/store.hpp"
#include "dnayield/service/synthetic.hpp"
#include "dnayield/stats/diagnostics.hpp"
#include "dnayield/stats/glm.hpp"
#include "dnayield/stats/hypothesis.hpp"
#include "dnayield/stats/trial.hpp"

#include "dnayield/service/http_api.hpp"

using namespace dnayield;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string store = "dnayield-store";
  std::string model;  // path to a serialized model
  std::uint64_t seed = 0;
  std::string config;
};

service::ServiceConfig load_cfg(const Globals& g) {
  auto c = g.config.empty() ? service::ServiceConfig{} : service::load_config(g.config);
  if (g.seed) c.seed = g.seed;
  return c;
}

YieldModel load_model_file(const std::string& path) {
  if (path.empty()) throw InvalidInput("--model <path> is required");
  auto m = deserialize_model(text::read_file(path));
  m.version = model_version_of(m);
  return m;
}

// Model version to run: --model file registered in the store, else the
// configured version, else the newest stored model.
std::string resolve_model(service::Store& store, const Globals& g, const service::ServiceConfig& c) {
  if (!g.model.empty()) return store.put_model(load_model_file(g.model));
  if (!c.model.empty()) return c.model;
  const auto v = store.model_versions();
  if (v.empty()) throw InvalidInput("no model in store; pass --model <path>");
  return v.back();
}

void write_or_print(const std::string& path, const std::string& body) {
  if (path.empty() || path == "-")
    std::cout << body;
  else
    text::write_file(path, body);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  for (const auto& t : text::split(s, ',')) v.push_back(text::to_double(text::trim(t), "list value"));
  return v;
}

service::ApiServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DNA yield prediction and slide-count recommendation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--store", g.store, "store directory")->capture_default_str();
  app.add_option("--model", g.model, "serialized model file");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--config", g.config, "key=value config file");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "ingest bundle directories into the store");
  std::vector<std::string> bundle_dirs;
  ingest->add_option("dirs", bundle_dirs, "bundle directories")->required()->check(CLI::ExistingDirectory);

  // run
  auto* run = app.add_subcommand("run", "run the pipeline for stored slides");
  std::vector<std::string> run_ids;
  bool run_all = false;
  run->add_option("slide_ids", run_ids, "slide ids");
  run->add_flag("--all", run_all, "every slide in the store");

  // fit
  auto* fit = app.add_subcommand("fit", "fit a yield model on a feature dataset CSV");
  std::string fit_data, fit_out, transform = "natural_log", reg = "L1";
  double strength = 0.01;
  bool fit_register = false;
  fit->add_option("--data", fit_data, "dataset CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", fit_out, "model output path")->required();
  fit->add_option("--transform", transform, "natural_log or box_cox")->capture_default_str();
  fit->add_option("--regularization", reg, "L1 or L2")->capture_default_str();
  fit->add_option("--strength", strength, "penalty strength")->capture_default_str();
  fit->add_flag("--register", fit_register, "also register the model in the store");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "evaluate the transform x penalty grid");
  std::string sweep_train, sweep_val, sweep_out;
  sweep->add_option("--train", sweep_train, "training dataset CSV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--val", sweep_val, "validation dataset CSV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", sweep_out, "sweep CSV (default stdout)");

  // predict / recommend
  auto* predict = app.add_subcommand("predict", "predicted ng per slide for a bundle directory");
  std::string predict_dir;
  predict->add_option("bundle", predict_dir, "bundle directory")->required()->check(CLI::ExistingDirectory);
  auto* recommend = app.add_subcommand("recommend", "recommendation payload for a bundle directory");
  std::string rec_dir, rec_out;
  recommend->add_option("bundle", rec_dir, "bundle directory")->required()->check(CLI::ExistingDirectory);
  recommend->add_option("--out", rec_out, "payload path (default stdout)");

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "percent success over operating points");
  std::string cal_records, cal_ops = "100,200,300,400,500,600,700,800,900,1000", cal_out;
  calibrate->add_option("--records", cal_records, "CSV model_pred,y_true,n_true")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--ops", cal_ops, "comma-separated operating points (ng)")->capture_default_str();
  calibrate->add_option("--out", cal_out, "CSV path (default stdout)");

  // simulate-scale
  auto* scale = app.add_subcommand("simulate-scale", "in-range fractions under scaled slide counts");
  std::string scale_records, scales = "1.0,1.1,1.2,1.3,1.4,1.5";
  scale->add_option("--records", scale_records, "CSV y_measured,n_actual")->required()->check(CLI::ExistingFile);
  scale->add_option("--scales", scales, "comma-separated scale factors")->capture_default_str();

  // power
  auto* power = app.add_subcommand("power", "two-proportion sample size table");
  double p1 = 0.67, alpha = 0.01, pw = 0.8;
  std::string p2s = "0.70,0.75,0.80,0.85,0.90,0.95,1.0";
  power->add_option("--p1", p1)->capture_default_str();
  power->add_option("--p2", p2s, "comma-separated alternatives")->capture_default_str();
  power->add_option("--alpha", alpha)->capture_default_str();
  power->add_option("--power", pw)->capture_default_str();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "trial metrics and GLM analyses from a trial log");
  std::string log_path, outcome, covariates;
  bool as_json = false, diagnostics = false, from_store = false;
  analyze->add_option("--log", log_path, "trial log CSV");
  analyze->add_flag("--from-store", from_store, "read outcomes recorded in the store");
  analyze->add_flag("--json", as_json, "metrics as JSON");
  analyze->add_option("--outcome", outcome, "undershoot, log_n_slides, zeroed_extraction_count or log_t_seq");
  analyze->add_option("--covariates", covariates, "comma-separated covariates");
  analyze->add_flag("--diagnostics", diagnostics, "simulated residual checks for the GLM");

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic bundles, dataset and trial log");
  std::string synth_out;
  service::SyntheticConfig scfg;
  bool synth_trial = false, synth_images = false, synth_dataset = false;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--n-slides", scfg.slides.n_slides)->capture_default_str();
  synth->add_option("--tissue-blobs", scfg.slides.tissue_blobs)->capture_default_str();
  synth->add_option("--cell-density", scfg.slides.cell_density)->capture_default_str();
  synth->add_option("--tumor-fraction", scfg.slides.tumor_fraction)->capture_default_str();
  synth->add_option("--yield-per-cell", scfg.slides.yield_per_cell_ng)->capture_default_str();
  synth->add_option("--noise-sigma", scfg.slides.noise_sigma)->capture_default_str();
  synth->add_flag("--images", synth_images, "include RGB rasters");
  synth->add_flag("--dataset", synth_dataset, "also write dataset.csv with whole-slide features");
  synth->add_flag("--trial", synth_trial, "also write trial_log.csv");
  service::TrialSynthConfig tcfg;
  synth->add_option("--overshoot-trad", tcfg.effects.overshoot_trad)->capture_default_str();
  synth->add_option("--overshoot-smart", tcfg.effects.overshoot_smart)->capture_default_str();
  synth->add_option("--day-slope", tcfg.effects.t_seq_day_slope)->capture_default_str();
  synth->add_option("--quality-slope", tcfg.effects.t_seq_quality_slope)->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP API");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = load_cfg(g);

    if (*ingest) {
      service::Store store(g.store);
      for (const auto& d : bundle_dirs) {
        try {
          std::cout << d << "\t" << store.ingest(service::read_bundle_dir(d)) << "\n";
        } catch (const service::BundleError& e) {
          std::cerr << d << ": " << e.what() << "\n";
          return 2;
        }
      }
    } else if (*run) {
      service::Store store(g.store);
      const auto version = resolve_model(store, g, cfg);
      if (run_all) run_ids = store.slide_ids();
      if (run_ids.empty()) throw InvalidInput("no slide ids given (or use --all)");
      int failed = 0;
      for (const auto& id : run_ids) {
        const auto r = service::run_pipeline(store, id, version, cfg.seed, {cfg.recommend_options()});
        std::cout << id << "\t" << r.run_id << "\t" << r.status;
        for (const auto& s : r.stages)
          if (s.status == "failed") std::cout << "\t" << s.name << ": " << s.detail;
        std::cout << "\n";
        failed += !r.succeeded();
      }
      return failed ? 1 : 0;
    } else if (*fit) {
      const auto d = parse_dataset_csv(text::read_file(fit_data));
      const auto res = fit_config(d, {parse_transform_kind(transform), parse_regularization(reg), strength});
      text::write_file(fit_out, serialize_model(res.model));
      std::cout << "version " << res.model.version << "\nsamples_used " << res.report.samples_used
                << "\nzero_targets_excluded " << res.report.zero_targets_excluded << "\nsweeps " << res.report.sweeps << "\nconverged "
                << (res.report.converged ? "true" : "false") << "\nr_train " << res.report.r_train << "\n";
      if (!res.report.converged)
        std::cerr << "warning: coordinate descent stopped at the sweep limit before reaching tolerance\n";
      if (fit_register) service::Store(g.store).put_model(res.model);
    } else if (*sweep) {
      const auto tr = parse_dataset_csv(text::read_file(sweep_train));
      const auto va = parse_dataset_csv(text::read_file(sweep_val));
      write_or_print(sweep_out, format_sweep_csv(sweep_parameters(tr, va, default_sweep_grid())));
    } else if (*predict || *recommend) {
      const auto m = load_model_file(g.model);
      auto bundle = service::read_bundle_dir(*predict ? predict_dir : rec_dir);
      const auto in = service::parse_bundle(bundle);
      const auto b = build_recommendation(m, in, cfg.recommend_options());
      if (*predict) {
        std::cout << "whole_slide_ng_per_slide " << b.recommendation.predicted_yield_ws << "\n";
        if (b.recommendation.predicted_yield_macro)
          std::cout << "macrodissection_ng_per_slide " << *b.recommendation.predicted_yield_macro << "\n";
        else
          std::cout << "macrodissection_ng_per_slide absent (no tumor detected)\n";
      } else {
        auto r = b.recommendation;
        r.bundle_hash = service::bundle_content_hash(bundle);
        r.slide_id = service::slide_id_for_hash(r.bundle_hash);
        write_or_print(rec_out, recommendation_payload(r));
      }
    } else if (*calibrate) {
      const auto recs = parse_calibration_records(text::read_file(cal_records));
      const auto ops = parse_list(cal_ops);
      write_or_print(cal_out, format_calibration_csv(calibrate_operating_points(recs, ops, cfg.success, cfg.failure)));
    } else if (*scale) {
      const auto recs = parse_scrape_records(text::read_file(scale_records));
      std::vector<ScalingResult> rs;
      for (double s : parse_list(scales)) rs.push_back(simulate_slide_scaling(recs, s, cfg.strata.range_lo, cfg.strata.range_hi));
      std::cout << format_scaling_csv(rs);
    } else if (*power) {
      std::cout << "p1,p2,effect_size,n_per_group\n";
      for (double p2 : parse_list(p2s)) {
        const auto s = stats::sample_size_two_proportions(p1, p2, alpha, pw, cfg.z_source);
        char es[32];
        std::snprintf(es, sizeof es, "%.6f", s.effect_size);
        std::cout << text::format_double(p1) << "," << text::format_double(p2) << "," << es << "," << s.n_per_group << "\n";
      }
    } else if (*analyze) {
      std::vector<stats::TrialRecord> recs;
      if (from_store)
        recs = service::Store(g.store).trial_records();
      else if (!log_path.empty())
        recs = stats::parse_trial_csv(text::read_file(log_path));
      else
        throw InvalidInput("analyze needs --log <csv> or --from-store");
      if (outcome.empty()) {
        const auto rep = stats::compute_trial_metrics(recs, cfg.strata);
        std::cout << (as_json ? stats::metric_report_json(rep).dump(2) + "\n" : stats::format_metric_report(rep));
      } else {
        std::vector<std::string> covs;
        if (!covariates.empty())
          for (const auto& c : text::split(covariates, ',')) covs.emplace_back(text::trim(c));
        const auto d = stats::encode_analysis(recs, stats::parse_outcome(outcome), covs);
        const auto f = stats::glm_fit(d.x, d.y, d.family, std::nullopt, d.names);
        std::cout << (as_json ? stats::format_glm_csv(f) : stats::format_glm_summary(f));
        if (diagnostics) {
          const auto r = stats::residual_diagnostics(f, d.x, d.y, cfg.n_sim, cfg.seed);
          std::cout << "\nsimulated residuals (n_sim=" << cfg.n_sim << ")\n"
                    << "  uniformity KS D=" << r.ks_d << " p=" << r.ks_p << "\n"
                    << "  dispersion ratio=" << r.dispersion_ratio << " p=" << r.dispersion_p << "\n"
                    << "  outliers=" << r.outliers << " p=" << r.outlier_p << "\n";
        }
      }
    } else if (*synth) {
      scfg.slides.with_images = synth_images;
      if (synth_trial) scfg.trial = tcfg;
      const auto out = service::generate_synthetic(scfg, g.seed);
      fs::create_directories(synth_out);
      std::string labels = "slide_id,planted_total,planted_tumor,planted_lymphocyte,n_slides,dna_yield_ng,ground_truth_ng_per_slide\n";
      for (std::size_t i = 0; i < out.slides.size(); ++i) {
        const auto& s = out.slides[i];
        service::write_bundle_dir(out.bundles[i], fs::path(synth_out) / "bundles" / s.inputs.slide_id);
        const auto& e = s.events.front();
        labels += s.inputs.slide_id + "," + std::to_string(s.planted.total) + "," + std::to_string(s.planted.tumor) + "," +
                  std::to_string(s.planted.lymphocyte) + "," + std::to_string(e.n_slides) + "," +
                  text::format_double(e.dna_yield) + "," + text::format_double(ground_truth_label(s.events)) + "\n";
      }
      text::write_file((fs::path(synth_out) / "labels.csv").string(), labels);
      if (synth_dataset)
        text::write_file((fs::path(synth_out) / "dataset.csv").string(),
                         format_dataset_csv(service::feature_dataset(out.slides, g.seed, cfg.features)));
      if (synth_trial) text::write_file((fs::path(synth_out) / "trial_log.csv").string(), stats::format_trial_csv(out.trial));
      std::cout << out.slides.size() << " bundles written to " << synth_out << "\n";
    } else if (*serve) {
      service::Store store(g.store);
      if (!g.model.empty()) store.put_model(load_model_file(g.model));
      service::ApiServer api(store, cfg);
      g_server = &api;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ":" << port << "\n";
      if (!api.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
      g_server = nullptr;
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
