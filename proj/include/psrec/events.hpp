#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psrec/errors.hpp"

namespace psrec {

// One detected photon: sub-pixel sky position plus energy in keV.
struct Event {
  double x = 0.0;
  double y = 0.0;
  double energy = 0.0;
};

// Event list bound to its detector extent. Pixel (i, j) covers
// [j, j+1) x [i, i+1) in (x, y) space, i.e. row = floor(y), col = floor(x).
class EventTable {
 public:
  EventTable(int width, int height, std::vector<Event> events)
      : width_(width), height_(height), events_(std::move(events)) {
    if (width_ <= 0 || height_ <= 0) throw DomainError("EventTable: extent must be positive");
    for (const Event& e : events_) {
      if (!(e.energy > 0.0)) throw DomainError("EventTable: event energy must be > 0 keV");
      if (e.x < 0.0 || e.x >= width_ || e.y < 0.0 || e.y >= height_)
        throw BoundsError("EventTable: event position outside detector extent");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }

 private:
  int width_;
  int height_;
  std::vector<Event> events_;
};

// Energy selection plus spectral binning: [lo, hi) split into nbins equal bins.
struct EnergyBand {
  double lo = 0.5;
  double hi = 3.0;
  int nbins = 25;
};

inline void validate_band(const EnergyBand& band) {
  if (!(band.lo < band.hi)) throw DomainError("EnergyBand: lo must be < hi");
  if (band.lo < 0.0) throw DomainError("EnergyBand: lo must be >= 0");
  if (band.nbins <= 0) throw DomainError("EnergyBand: nbins must be > 0");
}

// Dense row-major matrix of per-pixel photon counts.
class CountImage {
 public:
  CountImage(int rows, int cols)
      : rows_(rows), cols_(cols), counts_(checked_size(rows, cols), 0) {}

  CountImage(int rows, int cols, std::vector<std::int64_t> counts)
      : rows_(rows), cols_(cols), counts_(std::move(counts)) {
    if (counts_.size() != checked_size(rows, cols))
      throw DimensionError("CountImage: element count does not match extent");
    for (std::int64_t v : counts_)
      if (v < 0) throw DomainError("CountImage: counts must be non-negative");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool contains(int i, int j) const { return i >= 0 && i < rows_ && j >= 0 && j < cols_; }

  std::int64_t operator()(int i, int j) const { return counts_[idx(i, j)]; }
  std::int64_t& cell(int i, int j) { return counts_[idx(i, j)]; }

  std::int64_t total() const {
    std::int64_t s = 0;
    for (std::int64_t v : counts_) s += v;
    return s;
  }

  const std::vector<std::int64_t>& data() const { return counts_; }

 private:
  static std::size_t checked_size(int rows, int cols) {
    if (rows <= 0 || cols <= 0) throw DomainError("CountImage: extent must be positive");
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(j);
  }

  int rows_;
  int cols_;
  std::vector<std::int64_t> counts_;
};

// Window cut out of a parent image. `origin` and `center` stay in parent
// coordinates; the center is the pixel the window was drawn around (a peak
// candidate or a labeled position) and always lies inside the patch, which
// may be smaller than the requested window when it hits the image border.
class RegionPatch {
 public:
  RegionPatch(CountImage counts, int origin_row, int origin_col, int center_row, int center_col)
      : counts_(std::move(counts)),
        origin_row_(origin_row),
        origin_col_(origin_col),
        center_row_(center_row),
        center_col_(center_col) {
    if (center_row_ < origin_row_ || center_row_ >= origin_row_ + counts_.rows() ||
        center_col_ < origin_col_ || center_col_ >= origin_col_ + counts_.cols())
      throw BoundsError("RegionPatch: center must lie inside the patch");
  }

  const CountImage& counts() const { return counts_; }
  int rows() const { return counts_.rows(); }
  int cols() const { return counts_.cols(); }
  int origin_row() const { return origin_row_; }
  int origin_col() const { return origin_col_; }
  int center_row() const { return center_row_; }
  int center_col() const { return center_col_; }

  std::int64_t center_value() const {
    return counts_(center_row_ - origin_row_, center_col_ - origin_col_);
  }

 private:
  CountImage counts_;
  int origin_row_;
  int origin_col_;
  int center_row_;
  int center_col_;
};

namespace detail {

inline std::string csv_field(const std::string& line, std::size_t& pos, std::size_t line_no,
                             bool last) {
  const std::size_t comma = line.find(',', pos);
  if (last) {
    if (comma != std::string::npos)
      throw ParseError("line " + std::to_string(line_no) + ": too many fields");
    std::string f = line.substr(pos);
    pos = line.size();
    return f;
  }
  if (comma == std::string::npos)
    throw ParseError("line " + std::to_string(line_no) + ": too few fields");
  std::string f = line.substr(pos, comma - pos);
  pos = comma + 1;
  return f;
}

inline double parse_double(const std::string& field, std::size_t line_no) {
  if (field.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty field");
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || !std::isfinite(v))
    throw ParseError("line " + std::to_string(line_no) + ": not a finite number: '" + field + "'");
  return v;
}

inline long parse_long(const std::string& field, std::size_t line_no) {
  if (field.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty field");
  char* end = nullptr;
  const long v = std::strtol(field.c_str(), &end, 10);
  if (end != field.c_str() + field.size())
    throw ParseError("line " + std::to_string(line_no) + ": not an integer: '" + field + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& field, std::size_t line_no) {
  if (field.empty() || field[0] == '-')
    throw ParseError("line " + std::to_string(line_no) + ": not an unsigned integer: '" + field +
                     "'");
  char* end = nullptr;
  const unsigned long long v = std::strtoull(field.c_str(), &end, 10);
  if (end != field.c_str() + field.size())
    throw ParseError("line " + std::to_string(line_no) + ": not an unsigned integer: '" + field +
                     "'");
  return static_cast<std::uint64_t>(v);
}

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline bool skippable(const std::string& line) {
  if (line.empty()) return true;
  return line[0] == '#';
}

}  // namespace detail

// Event CSV: optional '#' comment lines, then a "width,height" header,
// then one "x,y,energy" row per event. LF line endings.
inline EventTable load_events(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open event file: " + path.string());

  std::string line;
  std::size_t line_no = 0;
  int width = 0, height = 0;
  bool have_header = false;
  std::vector<Event> events;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::skippable(line)) continue;
    std::size_t pos = 0;
    if (!have_header) {
      const long w = detail::parse_long(detail::csv_field(line, pos, line_no, false), line_no);
      const long h = detail::parse_long(detail::csv_field(line, pos, line_no, true), line_no);
      if (w <= 0 || h <= 0)
        throw ParseError("line " + std::to_string(line_no) + ": extent must be positive");
      width = static_cast<int>(w);
      height = static_cast<int>(h);
      have_header = true;
      continue;
    }
    Event e;
    e.x = detail::parse_double(detail::csv_field(line, pos, line_no, false), line_no);
    e.y = detail::parse_double(detail::csv_field(line, pos, line_no, false), line_no);
    e.energy = detail::parse_double(detail::csv_field(line, pos, line_no, true), line_no);
    events.push_back(e);
  }
  if (!have_header) throw ParseError("event file has no width,height header: " + path.string());
  return EventTable(width, height, std::move(events));
}

inline void save_events(const EventTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write event file: " + path.string());
  out << table.width() << ',' << table.height() << '\n';
  for (const Event& e : table.events()) {
    out << detail::format_double(e.x) << ',' << detail::format_double(e.y) << ','
        << detail::format_double(e.energy) << '\n';
  }
  if (!out) throw ParseError("write failed: " + path.string());
}

// Counts in-band events per pixel. Every in-band event lands in exactly one
// pixel, so the image total equals the in-band event count.
inline CountImage bin_image(const EventTable& table, const EnergyBand& band) {
  validate_band(band);
  CountImage image(table.height(), table.width());
  for (const Event& e : table.events()) {
    if (e.energy < band.lo || e.energy >= band.hi) continue;
    const int i = static_cast<int>(std::floor(e.y));
    const int j = static_cast<int>(std::floor(e.x));
    ++image.cell(i, j);
  }
  return image;
}

// Cuts a window x window patch centered on (center_row, center_col),
// truncated at the image border. `window` must be odd so the center pixel is
// unambiguous.
inline RegionPatch extract_region(const CountImage& image, int center_row, int center_col,
                                  int window) {
  if (window < 3 || window % 2 == 0) throw DomainError("extract_region: window must be odd, >= 3");
  if (!image.contains(center_row, center_col))
    throw BoundsError("extract_region: center outside image");
  const int half = window / 2;
  const int r0 = std::max(0, center_row - half);
  const int r1 = std::min(image.rows() - 1, center_row + half);
  const int c0 = std::max(0, center_col - half);
  const int c1 = std::min(image.cols() - 1, center_col + half);
  CountImage patch(r1 - r0 + 1, c1 - c0 + 1);
  for (int i = r0; i <= r1; ++i)
    for (int j = c0; j <= c1; ++j) patch.cell(i - r0, j - c0) = image(i, j);
  return RegionPatch(std::move(patch), r0, c0, center_row, center_col);
}

// Per-pixel-normalized spectrum of the events falling inside the patch
// footprint: counts per energy bin divided by the patch area, so patches
// truncated at the border stay comparable with full-size ones.
inline std::vector<double> extract_spectrum(const EventTable& table, const RegionPatch& patch,
                                            const EnergyBand& band) {
  validate_band(band);
  const double bin_width = (band.hi - band.lo) / band.nbins;
  std::vector<double> spectrum(static_cast<std::size_t>(band.nbins), 0.0);
  const int r0 = patch.origin_row(), r1 = patch.origin_row() + patch.rows();
  const int c0 = patch.origin_col(), c1 = patch.origin_col() + patch.cols();
  for (const Event& e : table.events()) {
    if (e.energy < band.lo || e.energy >= band.hi) continue;
    const int i = static_cast<int>(std::floor(e.y));
    const int j = static_cast<int>(std::floor(e.x));
    if (i < r0 || i >= r1 || j < c0 || j >= c1) continue;
    int b = static_cast<int>((e.energy - band.lo) / bin_width);
    if (b >= band.nbins) b = band.nbins - 1;  // guards the FP edge at e -> hi
    spectrum[static_cast<std::size_t>(b)] += 1.0;
  }
  const double area = static_cast<double>(patch.rows()) * static_cast<double>(patch.cols());
  for (double& v : spectrum) v /= area;
  return spectrum;
}

}  // namespace psrec
