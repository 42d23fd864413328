#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "psrec/classes.hpp"
#include "psrec/errors.hpp"
#include "psrec/events.hpp"
#include "psrec/features.hpp"
#include "psrec/peaks.hpp"
#include "psrec/simulate.hpp"

namespace psrec {

// CSV codecs for everything besides events (those live with EventTable) and
// models (model_io.hpp). All files are LF-terminated; '#' starts a comment.

namespace detail {

template <typename RowFn>
void read_csv(const std::filesystem::path& path, RowFn&& per_row) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (skippable(line)) continue;
    per_row(line, line_no);
  }
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write file: " + path.string());
  return out;
}

}  // namespace detail

// Truth CSV: "x,y,class".
inline void save_truth(const std::vector<TruthSource>& truth, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  for (const TruthSource& t : truth)
    out << detail::format_double(t.x) << ',' << detail::format_double(t.y) << ','
        << to_string(t.object_class) << '\n';
  if (!out) throw ParseError("write failed: " + path.string());
}

inline std::vector<TruthSource> load_truth(const std::filesystem::path& path) {
  std::vector<TruthSource> truth;
  detail::read_csv(path, [&](const std::string& line, std::size_t line_no) {
    std::size_t pos = 0;
    TruthSource t;
    t.x = detail::parse_double(detail::csv_field(line, pos, line_no, false), line_no);
    t.y = detail::parse_double(detail::csv_field(line, pos, line_no, false), line_no);
    try {
      t.object_class = object_class_from_string(detail::csv_field(line, pos, line_no, true));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    truth.push_back(t);
  });
  return truth;
}

// Training label CSV: "row,col,class".
inline void save_labels(const std::vector<LabeledPosition>& labels,
                        const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  for (const LabeledPosition& l : labels)
    out << l.row << ',' << l.col << ',' << to_string(l.object_class) << '\n';
  if (!out) throw ParseError("write failed: " + path.string());
}

inline std::vector<LabeledPosition> load_labels(const std::filesystem::path& path) {
  std::vector<LabeledPosition> labels;
  detail::read_csv(path, [&](const std::string& line, std::size_t line_no) {
    std::size_t pos = 0;
    LabeledPosition l;
    l.row = static_cast<int>(detail::parse_long(detail::csv_field(line, pos, line_no, false), line_no));
    l.col = static_cast<int>(detail::parse_long(detail::csv_field(line, pos, line_no, false), line_no));
    try {
      l.object_class = object_class_from_string(detail::csv_field(line, pos, line_no, true));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    labels.push_back(l);
  });
  return labels;
}

// Candidate CSV: "rank,row,col,peak_value".
inline void save_candidates(const std::vector<PeakCandidate>& candidates,
                            const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "rank,row,col,peak_value\n";
  for (const PeakCandidate& c : candidates)
    out << c.rank << ',' << c.row << ',' << c.col << ',' << c.peak_value << '\n';
  if (!out) throw ParseError("write failed: " + path.string());
}

inline std::vector<PeakCandidate> load_candidates(const std::filesystem::path& path) {
  std::vector<PeakCandidate> candidates;
  bool saw_header = false;
  detail::read_csv(path, [&](const std::string& line, std::size_t line_no) {
    if (!saw_header) {
      if (line != "rank,row,col,peak_value")
        throw ParseError("line " + std::to_string(line_no) + ": bad candidate header");
      saw_header = true;
      return;
    }
    std::size_t pos = 0;
    PeakCandidate c;
    c.rank = static_cast<int>(detail::parse_long(detail::csv_field(line, pos, line_no, false), line_no));
    c.row = static_cast<int>(detail::parse_long(detail::csv_field(line, pos, line_no, false), line_no));
    c.col = static_cast<int>(detail::parse_long(detail::csv_field(line, pos, line_no, false), line_no));
    c.peak_value = detail::parse_long(detail::csv_field(line, pos, line_no, true), line_no);
    candidates.push_back(c);
  });
  if (!saw_header) throw ParseError("candidate file has no header: " + path.string());
  return candidates;
}

// Feature dump CSV: header names every dimension, then one row per vector.
inline void save_features(const std::vector<FeatureVector>& vectors,
                          const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  const std::size_t nbins = vectors.empty() ? 0 : vectors.front().spec.size();
  for (std::size_t b = 0; b < nbins; ++b) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "spec_%02zu", b);
    out << buf << ',';
  }
  out << "cpp,par,var,nop\n";
  for (const FeatureVector& fv : vectors) {
    if (fv.spec.size() != nbins)
      throw DimensionError("save_features: inconsistent spectrum lengths");
    for (double v : fv.spec) out << detail::format_double(v) << ',';
    out << detail::format_double(fv.cpp) << ',' << detail::format_double(fv.par) << ','
        << detail::format_double(fv.var) << ',' << fv.nop << '\n';
  }
  if (!out) throw ParseError("write failed: " + path.string());
}

// Classification CSV: candidates with their assigned code.
inline void save_classified(const std::vector<PeakCandidate>& candidates,
                            const std::vector<ClassCode>& codes,
                            const std::filesystem::path& path) {
  if (candidates.size() != codes.size())
    throw DimensionError("save_classified: candidate/code count mismatch");
  auto out = detail::open_out(path);
  out << "rank,row,col,peak_value,label1,label2,decision,class\n";
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const PeakCandidate& c = candidates[i];
    const ClassCode& k = codes[i];
    out << c.rank << ',' << c.row << ',' << c.col << ',' << c.peak_value << ',' << k.label1
        << ',' << k.label2 << ',' << k.decision << ',' << to_string(k.object_class) << '\n';
  }
  if (!out) throw ParseError("write failed: " + path.string());
}

// Scene spec file: key=value lines plus one "source=" line per source:
//   source=<point|extended>,cx,cy,total_counts,sigma_major,sigma_minor,angle,
//          <powerlaw|thermal|flat>,param
inline SceneSpec load_scene_spec(const std::filesystem::path& path) {
  SceneSpec spec;
  spec.sources.clear();
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene spec: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::skippable(line)) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "width")
      spec.width = static_cast<int>(detail::parse_long(value, line_no));
    else if (key == "height")
      spec.height = static_cast<int>(detail::parse_long(value, line_no));
    else if (key == "bkg_rate")
      spec.bkg_rate = detail::parse_double(value, line_no);
    else if (key == "bright_threshold")
      spec.bright_threshold = detail::parse_double(value, line_no);
    else if (key == "seed")
      spec.seed = detail::parse_u64(value, line_no);
    else if (key == "source") {
      std::size_t pos = 0;
      SourceSpec s;
      const std::string kind = detail::csv_field(value, pos, line_no, false);
      if (kind == "point")
        s.kind = SourceKind::Point;
      else if (kind == "extended")
        s.kind = SourceKind::Extended;
      else
        throw ParseError("line " + std::to_string(line_no) + ": unknown source kind '" + kind + "'");
      s.cx = detail::parse_double(detail::csv_field(value, pos, line_no, false), line_no);
      s.cy = detail::parse_double(detail::csv_field(value, pos, line_no, false), line_no);
      s.total_counts = detail::parse_double(detail::csv_field(value, pos, line_no, false), line_no);
      s.sigma_major = detail::parse_double(detail::csv_field(value, pos, line_no, false), line_no);
      s.sigma_minor = detail::parse_double(detail::csv_field(value, pos, line_no, false), line_no);
      s.angle = detail::parse_double(detail::csv_field(value, pos, line_no, false), line_no);
      const std::string model = detail::csv_field(value, pos, line_no, false);
      if (model == "powerlaw")
        s.spectrum = SpectrumModel::PowerLaw;
      else if (model == "thermal")
        s.spectrum = SpectrumModel::Thermal;
      else if (model == "flat")
        s.spectrum = SpectrumModel::Flat;
      else
        throw ParseError("line " + std::to_string(line_no) + ": unknown spectrum '" + model + "'");
      s.spectrum_param = detail::parse_double(detail::csv_field(value, pos, line_no, true), line_no);
      spec.sources.push_back(s);
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  validate_scene(spec);
  return spec;
}

// Benchmark manifest: "name,role,seed" per scene; files live next to it as
// <name>_events.csv, <name>_truth.csv, <name>_labels.csv.
struct ManifestEntry {
  std::string name;
  std::string role;  // "train" or "test"
  std::uint64_t seed = 0;
};

inline void save_manifest(const std::vector<ManifestEntry>& entries,
                          const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "name,role,seed\n";
  for (const ManifestEntry& e : entries) out << e.name << ',' << e.role << ',' << e.seed << '\n';
  if (!out) throw ParseError("write failed: " + path.string());
}

inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::vector<ManifestEntry> entries;
  bool saw_header = false;
  detail::read_csv(path, [&](const std::string& line, std::size_t line_no) {
    if (!saw_header) {
      if (line != "name,role,seed")
        throw ParseError("line " + std::to_string(line_no) + ": bad manifest header");
      saw_header = true;
      return;
    }
    std::size_t pos = 0;
    ManifestEntry e;
    e.name = detail::csv_field(line, pos, line_no, false);
    e.role = detail::csv_field(line, pos, line_no, false);
    if (e.role != "train" && e.role != "test")
      throw ParseError("line " + std::to_string(line_no) + ": role must be train or test");
    e.seed = detail::parse_u64(detail::csv_field(line, pos, line_no, true), line_no);
    entries.push_back(e);
  });
  if (!saw_header) throw ParseError("manifest has no header: " + path.string());
  return entries;
}

}  // namespace psrec
