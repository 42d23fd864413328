#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "psrec/errors.hpp"
#include "psrec/events.hpp"
#include "psrec/peaks.hpp"
#include "psrec/simulate.hpp"
#include "psrec/svm.hpp"

namespace psrec {

// Effective settings for a pipeline run. Defaults here are the defaults
// everywhere; a config file (key=value lines) and command-line flags override
// them in that order. dump_config() emits every key so a dumped config
// reloads to an identical RunConfig.
struct RunConfig {
  EnergyBand band;
  DetectionConfig detection;
  TrainConfig train;
  LabelPolicy labels;
  double match_radius = 4.0;
  double bright_threshold = 200.0;
  std::uint64_t seed = kDefaultMasterSeed;
  int scenes = kBenchmarkScenes;
};

inline void validate_config(const RunConfig& cfg) {
  validate_band(cfg.band);
  validate_detection(cfg.detection);
  validate_train(cfg.train);
  if (cfg.match_radius < 0.0) throw DomainError("RunConfig: match_radius must be >= 0");
  if (!(cfg.bright_threshold > 0.0)) throw DomainError("RunConfig: bright_threshold must be > 0");
  if (cfg.scenes < 2) throw DomainError("RunConfig: scenes must be >= 2 (train + test)");
  if (cfg.labels.n_faint_bkg < cfg.labels.n_hard_bkg || cfg.labels.n_hard_bkg < 0 ||
      cfg.labels.n_bright_bkg < 0)
    throw DomainError("RunConfig: label counts must satisfy n_faint_bkg >= n_hard_bkg >= 0");
}

// Applies one key=value setting. Shared by the file loader and the CLI
// overrides so both accept exactly the same vocabulary.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const std::size_t line_no = 0;  // settings carry no file position
  if (key == "band_lo")
    cfg.band.lo = detail::parse_double(value, line_no);
  else if (key == "band_hi")
    cfg.band.hi = detail::parse_double(value, line_no);
  else if (key == "nbins")
    cfg.band.nbins = static_cast<int>(detail::parse_long(value, line_no));
  else if (key == "window")
    cfg.detection.window = static_cast<int>(detail::parse_long(value, line_no));
  else if (key == "sigma_mult")
    cfg.detection.sigma_mult = detail::parse_double(value, line_no);
  else if (key == "min_separation")
    cfg.detection.min_separation = static_cast<int>(detail::parse_long(value, line_no));
  else if (key == "flat_ratio")
    cfg.detection.flat_ratio = detail::parse_double(value, line_no);
  else if (key == "flat_count")
    cfg.detection.flat_count = static_cast<int>(detail::parse_long(value, line_no));
  else if (key == "flat_radius")
    cfg.detection.flat_radius = static_cast<int>(detail::parse_long(value, line_no));
  else if (key == "svm_c")
    cfg.train.c = detail::parse_double(value, line_no);
  else if (key == "svm_gamma") {
    if (value == "auto")
      cfg.train.gamma.reset();
    else
      cfg.train.gamma = detail::parse_double(value, line_no);
  } else if (key == "svm_tol")
    cfg.train.tol = detail::parse_double(value, line_no);
  else if (key == "svm_max_passes")
    cfg.train.max_passes = static_cast<int>(detail::parse_long(value, line_no));
  else if (key == "match_radius")
    cfg.match_radius = detail::parse_double(value, line_no);
  else if (key == "bright_threshold")
    cfg.bright_threshold = detail::parse_double(value, line_no);
  else if (key == "seed")
    cfg.seed = detail::parse_u64(value, line_no);
  else if (key == "scenes")
    cfg.scenes = static_cast<int>(detail::parse_long(value, line_no));
  else if (key == "labels_faint_bkg")
    cfg.labels.n_faint_bkg = static_cast<int>(detail::parse_long(value, line_no));
  else if (key == "labels_hard_bkg")
    cfg.labels.n_hard_bkg = static_cast<int>(detail::parse_long(value, line_no));
  else if (key == "labels_bright_bkg")
    cfg.labels.n_bright_bkg = static_cast<int>(detail::parse_long(value, line_no));
  else
    throw ParseError("unknown config key: '" + key + "'");
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path.string());
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::skippable(line)) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(line_no) + ": expected key=value");
    try {
      apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate_config(cfg);
  return cfg;
}

inline std::string dump_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "band_lo=" << detail::format_double(cfg.band.lo) << '\n';
  out << "band_hi=" << detail::format_double(cfg.band.hi) << '\n';
  out << "nbins=" << cfg.band.nbins << '\n';
  out << "window=" << cfg.detection.window << '\n';
  out << "sigma_mult=" << detail::format_double(cfg.detection.sigma_mult) << '\n';
  out << "min_separation=" << cfg.detection.min_separation << '\n';
  out << "flat_ratio=" << detail::format_double(cfg.detection.flat_ratio) << '\n';
  out << "flat_count=" << cfg.detection.flat_count << '\n';
  out << "flat_radius=" << cfg.detection.flat_radius << '\n';
  out << "svm_c=" << detail::format_double(cfg.train.c) << '\n';
  if (cfg.train.gamma)
    out << "svm_gamma=" << detail::format_double(*cfg.train.gamma) << '\n';
  else
    out << "svm_gamma=auto\n";
  out << "svm_tol=" << detail::format_double(cfg.train.tol) << '\n';
  out << "svm_max_passes=" << cfg.train.max_passes << '\n';
  out << "match_radius=" << detail::format_double(cfg.match_radius) << '\n';
  out << "bright_threshold=" << detail::format_double(cfg.bright_threshold) << '\n';
  out << "seed=" << cfg.seed << '\n';
  out << "scenes=" << cfg.scenes << '\n';
  out << "labels_faint_bkg=" << cfg.labels.n_faint_bkg << '\n';
  out << "labels_hard_bkg=" << cfg.labels.n_hard_bkg << '\n';
  out << "labels_bright_bkg=" << cfg.labels.n_bright_bkg << '\n';
  return out.str();
}

}  // namespace psrec
