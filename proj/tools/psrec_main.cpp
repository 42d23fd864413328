// Command-line front end for the point-source recognition pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 data/config error, 3 training
// failed to converge.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "psrec/psrec.hpp"

namespace fs = std::filesystem;

namespace {

struct CliState {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;  // key, value in CLI order
};

// Every RunConfig key gets a mirror flag: --band-lo sets band_lo, and so on.
void add_config_flags(CLI::App& app, CliState& state) {
  static const char* kKeys[] = {
      "band_lo",        "band_hi",        "nbins",           "window",
      "sigma_mult",     "min_separation", "flat_ratio",      "flat_count",
      "flat_radius",    "svm_c",          "svm_gamma",       "svm_tol",
      "svm_max_passes", "match_radius",   "bright_threshold", "seed",
      "scenes",         "labels_faint_bkg", "labels_hard_bkg", "labels_bright_bkg",
  };
  for (const char* key : kKeys) {
    std::string flag = "--";
    for (const char* p = key; *p; ++p) flag += (*p == '_') ? '-' : *p;
    const std::string key_str = key;
    app.add_option_function<std::string>(
        flag,
        [&state, key_str](const std::string& value) { state.overrides.emplace_back(key_str, value); },
        "override config key " + key_str);
  }
}

psrec::RunConfig effective_config(const CliState& state) {
  psrec::RunConfig cfg;
  if (!state.config_path.empty()) cfg = psrec::load_config(state.config_path);
  for (const auto& [key, value] : state.overrides) psrec::apply_setting(cfg, key, value);
  psrec::validate_config(cfg);
  return cfg;
}

std::uint64_t solver_seed(const psrec::RunConfig& cfg) {
  return psrec::mix_seed(cfg.seed, 0x50f7);  // solver stream, distinct from scene streams
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw psrec::ParseError("cannot write file: " + path.string());
  out << text;
  if (!out) throw psrec::ParseError("write failed: " + path.string());
}

// --- simulate ---------------------------------------------------------------

void run_simulate(const psrec::RunConfig& cfg, const std::string& out_dir,
                  const std::string& scene_spec_path) {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  std::vector<psrec::SceneSpec> specs;
  std::vector<psrec::ManifestEntry> manifest;
  if (!scene_spec_path.empty()) {
    specs.push_back(psrec::load_scene_spec(scene_spec_path));
    manifest.push_back({"scene_00", "test", specs[0].seed});
  } else {
    const psrec::Benchmark bench = psrec::default_benchmark(cfg.seed, cfg.scenes);
    int index = 0;
    for (const psrec::SceneSpec& s : bench.train) {
      char name[32];
      std::snprintf(name, sizeof(name), "scene_%02d", index++);
      manifest.push_back({name, "train", s.seed});
      specs.push_back(s);
    }
    for (const psrec::SceneSpec& s : bench.test) {
      char name[32];
      std::snprintf(name, sizeof(name), "scene_%02d", index++);
      manifest.push_back({name, "test", s.seed});
      specs.push_back(s);
    }
  }

  for (std::size_t i = 0; i < specs.size(); ++i) {
    const psrec::SimulatedScene scene = psrec::simulate(specs[i]);
    const std::string& name = manifest[i].name;
    psrec::save_events(scene.events, dir / (name + "_events.csv"));
    psrec::save_truth(scene.truth, dir / (name + "_truth.csv"));
    const psrec::CountImage image = psrec::bin_image(scene.events, cfg.band);
    const auto labels = psrec::sample_training_labels(
        specs[i], image, scene.truth, cfg.labels, psrec::mix_seed(specs[i].seed, 0x1ab));
    psrec::save_labels(labels, dir / (name + "_labels.csv"));
  }
  psrec::save_manifest(manifest, dir / "manifest.csv");
  std::cout << "wrote " << specs.size() << " scenes to " << out_dir << '\n';
}

// --- detect -----------------------------------------------------------------

void run_detect(const psrec::RunConfig& cfg, const std::string& events_path,
                const std::string& out_path) {
  const psrec::EventTable table = psrec::load_events(events_path);
  const psrec::CountImage image = psrec::bin_image(table, cfg.band);
  const std::vector<psrec::PeakCandidate> candidates =
      psrec::detect_peaks(image, cfg.detection);
  if (out_path.empty()) {
    std::cout << "rank,row,col,peak_value\n";
    for (const psrec::PeakCandidate& c : candidates)
      std::cout << c.rank << ',' << c.row << ',' << c.col << ',' << c.peak_value << '\n';
  } else {
    psrec::save_candidates(candidates, out_path);
    std::cout << "wrote " << candidates.size() << " candidates to " << out_path << '\n';
  }
}

// --- train ------------------------------------------------------------------

void run_train(const psrec::RunConfig& cfg, const std::string& data_dir,
               const std::string& out_model, const std::string& dump_features_path) {
  const fs::path dir(data_dir);
  const auto manifest = psrec::load_manifest(dir / "manifest.csv");

  std::vector<psrec::LabeledSample> samples;
  int used = 0;
  for (const psrec::ManifestEntry& entry : manifest) {
    if (entry.role != "train") continue;
    const psrec::EventTable table = psrec::load_events(dir / (entry.name + "_events.csv"));
    const auto labels = psrec::load_labels(dir / (entry.name + "_labels.csv"));
    auto scene_samples =
        psrec::extract_labeled_samples(table, labels, cfg.band, cfg.detection.window);
    for (auto& s : scene_samples) samples.push_back(std::move(s));
    ++used;
  }
  if (samples.empty()) throw psrec::TrainingError("no training scenes in manifest");

  if (!dump_features_path.empty()) {
    std::vector<psrec::FeatureVector> vectors;
    vectors.reserve(samples.size());
    for (const auto& s : samples) vectors.push_back(s.features);
    psrec::save_features(vectors, dump_features_path);
  }

  psrec::TrainConfig train_cfg = cfg.train;
  train_cfg.seed = solver_seed(cfg);
  const psrec::GbtModel model = psrec::train_gbt(samples, train_cfg);
  psrec::save_model(model, out_model);
  std::cout << "trained on " << samples.size() << " samples from " << used << " scenes; "
            << model.total_submodels() << " submodels; model written to " << out_model << '\n';
}

// --- classify ---------------------------------------------------------------

void run_classify(const psrec::RunConfig& cfg, const std::string& model_path,
                  const std::string& events_path, const std::string& out_path,
                  const std::string& dump_features_path) {
  const psrec::GbtModel model = psrec::load_model(model_path);
  if (model.nbins() != cfg.band.nbins)
    throw psrec::DimensionError("model expects nbins=" + std::to_string(model.nbins()) +
                                " but config says nbins=" + std::to_string(cfg.band.nbins));
  const psrec::EventTable table = psrec::load_events(events_path);
  const psrec::CountImage image = psrec::bin_image(table, cfg.band);
  const double lambda_hat = psrec::estimate_lambda(image);
  const auto candidates = psrec::detect_peaks(image, cfg.detection);

  std::vector<psrec::FeatureVector> vectors;
  std::vector<psrec::ClassCode> codes;
  vectors.reserve(candidates.size());
  codes.reserve(candidates.size());
  for (const psrec::PeakCandidate& c : candidates) {
    vectors.push_back(psrec::position_features(table, image, lambda_hat, c.row, c.col, cfg.band,
                                               cfg.detection.window));
    codes.push_back(model.classify(vectors.back()));
  }
  if (!dump_features_path.empty()) psrec::save_features(vectors, dump_features_path);

  if (out_path.empty()) {
    std::cout << "rank,row,col,peak_value,label1,label2,decision,class\n";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto& c = candidates[i];
      const auto& k = codes[i];
      std::cout << c.rank << ',' << c.row << ',' << c.col << ',' << c.peak_value << ','
                << k.label1 << ',' << k.label2 << ',' << k.decision << ','
                << psrec::to_string(k.object_class) << '\n';
    }
  } else {
    psrec::save_classified(candidates, codes, out_path);
    std::cout << "wrote " << candidates.size() << " classified candidates to " << out_path
              << '\n';
  }
}

// --- evaluate ---------------------------------------------------------------

void run_evaluate(const psrec::RunConfig& cfg, const std::string& model_path,
                  const std::string& data_dir, const std::string& out_dir) {
  const psrec::GbtModel model = psrec::load_model(model_path);
  if (model.nbins() != cfg.band.nbins)
    throw psrec::DimensionError("model expects nbins=" + std::to_string(model.nbins()) +
                                " but config says nbins=" + std::to_string(cfg.band.nbins));
  const fs::path dir(data_dir);
  const auto manifest = psrec::load_manifest(dir / "manifest.csv");

  if (!out_dir.empty()) fs::create_directories(out_dir);
  std::vector<psrec::EvalReport> reports;
  for (const psrec::ManifestEntry& entry : manifest) {
    if (entry.role != "test") continue;
    const psrec::EventTable table = psrec::load_events(dir / (entry.name + "_events.csv"));
    const auto truth = psrec::load_truth(dir / (entry.name + "_truth.csv"));
    const psrec::EvalReport report = psrec::evaluate_pipeline(model, table, truth, cfg.band,
                                                              cfg.detection, cfg.match_radius);
    if (!out_dir.empty())
      write_text(fs::path(out_dir) / (entry.name + "_report.csv"), psrec::report_csv(report));
    reports.push_back(report);
  }
  if (reports.empty()) throw psrec::TrainingError("no test scenes in manifest");

  const psrec::EvalReport merged = psrec::merge_reports(reports);
  if (!out_dir.empty()) {
    write_text(fs::path(out_dir) / "combined_report.csv", psrec::report_csv(merged));
    write_text(fs::path(out_dir) / "combined_report.txt", psrec::report_text(merged));
  }
  std::cout << psrec::report_text(merged);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"X-ray point-source recognition pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  CliState state;
  app.add_option("--config", state.config_path, "config file (key=value lines)");
  add_config_flags(app, state);

  std::string out_dir, scene_spec, events_path, model_path, out_path, data_dir, dump_features;

  CLI::App* sim = app.add_subcommand("simulate", "generate synthetic scenes");
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--scene-spec", scene_spec, "single-scene spec file (default: benchmark)");
  sim->callback([&] { run_simulate(effective_config(state), out_dir, scene_spec); });

  CLI::App* det = app.add_subcommand("detect", "detect candidate peaks in an event file");
  det->add_option("--events", events_path, "event CSV")->required();
  det->add_option("--out", out_path, "candidate CSV (default: stdout)");
  det->callback([&] { run_detect(effective_config(state), events_path, out_path); });

  CLI::App* train = app.add_subcommand("train", "train a classifier from labeled scenes");
  train->add_option("--data", data_dir, "scene directory with manifest.csv")->required();
  train->add_option("--out", out_path, "model file")->required();
  train->add_option("--dump-features", dump_features, "write training features to CSV");
  train->callback(
      [&] { run_train(effective_config(state), data_dir, out_path, dump_features); });

  CLI::App* cls = app.add_subcommand("classify", "detect and classify candidates");
  cls->add_option("--model", model_path, "model file")->required();
  cls->add_option("--events", events_path, "event CSV")->required();
  cls->add_option("--out", out_path, "classification CSV (default: stdout)");
  cls->add_option("--dump-features", dump_features, "write candidate features to CSV");
  cls->callback([&] {
    run_classify(effective_config(state), model_path, events_path, out_path, dump_features);
  });

  CLI::App* ev = app.add_subcommand("evaluate", "score a model on test scenes");
  ev->add_option("--model", model_path, "model file")->required();
  ev->add_option("--data", data_dir, "scene directory with manifest.csv")->required();
  ev->add_option("--out-dir", out_dir, "directory for per-scene and combined reports");
  ev->callback([&] { run_evaluate(effective_config(state), model_path, data_dir, out_dir); });

  CLI::App* cfg_cmd = app.add_subcommand("config", "print the effective configuration");
  cfg_cmd->add_option("--out", out_path, "write to file instead of stdout");
  cfg_cmd->callback([&] {
    const std::string text = psrec::dump_config(effective_config(state));
    if (out_path.empty())
      std::cout << text;
    else
      write_text(out_path, text);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const psrec::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const psrec::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
