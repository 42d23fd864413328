#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "psrec/errors.hpp"
#include "psrec/events.hpp"

namespace psrec {

// Local-maximum search tuned for Poisson-noise count images.
//
// The pipeline is:
//   1. estimate the mean count rate lambda over the whole image,
//   2. zero out pixels at or below lambda (pure-background suppression),
//   3. walk the surviving pixels in descending count order, accepting a pixel
//      as a peak when it clears lambda + sigma_mult * sqrt(lambda), is not
//      within min_separation (Chebyshev) of an already accepted peak, and its
//      neighborhood is not flat (extended emission rejection).
struct DetectionConfig {
  double sigma_mult = 3.0;    // acceptance threshold in Poisson sigmas above lambda
  int min_separation = 8;     // Chebyshev exclusion radius between accepted peaks
  double flat_ratio = 0.9;    // neighbor / peak ratio that counts as "comparable"
  int flat_count = 5;         // comparable neighbors at or above this reject the peak
  int flat_radius = 3;        // Chebyshev radius of the flatness neighborhood
  int window = 17;            // feature window drawn around accepted peaks (odd)
};

inline void validate_detection(const DetectionConfig& cfg) {
  if (cfg.sigma_mult < 0.0) throw DomainError("DetectionConfig: sigma_mult must be >= 0");
  if (cfg.min_separation < 1) throw DomainError("DetectionConfig: min_separation must be >= 1");
  if (!(cfg.flat_ratio > 0.0 && cfg.flat_ratio <= 1.0))
    throw DomainError("DetectionConfig: flat_ratio must be in (0, 1]");
  if (cfg.flat_count < 1) throw DomainError("DetectionConfig: flat_count must be >= 1");
  if (cfg.flat_radius < 1) throw DomainError("DetectionConfig: flat_radius must be >= 1");
  if (cfg.window < 3 || cfg.window % 2 == 0)
    throw DomainError("DetectionConfig: window must be odd, >= 3");
}

struct PeakCandidate {
  int rank = 0;  // 0-based acceptance order, strongest first
  int row = 0;
  int col = 0;
  std::int64_t peak_value = 0;
};

// Mean count per pixel; the maximum-likelihood Poisson rate when the image is
// pure background.
inline double estimate_lambda(const CountImage& image) {
  return static_cast<double>(image.total()) /
         (static_cast<double>(image.rows()) * static_cast<double>(image.cols()));
}

// Zeroes every pixel at or below lambda_hat, keeping the rest verbatim.
inline CountImage threshold_image(const CountImage& image, double lambda_hat) {
  if (lambda_hat < 0.0) throw DomainError("threshold_image: lambda_hat must be >= 0");
  CountImage out(image.rows(), image.cols());
  for (int i = 0; i < image.rows(); ++i)
    for (int j = 0; j < image.cols(); ++j) {
      const std::int64_t v = image(i, j);
      if (static_cast<double>(v) > lambda_hat) out.cell(i, j) = v;
    }
  return out;
}

// True when the position looks like an isolated peak rather than a spot on a
// plateau: fewer than flat_count neighbors within flat_radius (Chebyshev,
// position excluded) reach flat_ratio times the position's own value.
// A zero-valued position is all plateau by convention.
inline bool flatness_filter(const CountImage& image, int row, int col,
                            const DetectionConfig& cfg) {
  validate_detection(cfg);
  if (!image.contains(row, col)) throw BoundsError("flatness_filter: position outside image");
  const std::int64_t peak = image(row, col);
  if (peak <= 0) return false;
  const double comparable = cfg.flat_ratio * static_cast<double>(peak);
  int found = 0;
  for (int di = -cfg.flat_radius; di <= cfg.flat_radius; ++di)
    for (int dj = -cfg.flat_radius; dj <= cfg.flat_radius; ++dj) {
      if (di == 0 && dj == 0) continue;
      const int i = row + di, j = col + dj;
      if (!image.contains(i, j)) continue;
      if (static_cast<double>(image(i, j)) >= comparable) {
        if (++found >= cfg.flat_count) return false;
      }
    }
  return true;
}

// Full detection pass as described above. Candidates come back in acceptance
// order (descending count, row-major on ties), rank densely numbered from 0.
// The flatness test runs against the raw image so plateau neighbors below
// lambda still count.
inline std::vector<PeakCandidate> detect_peaks(const CountImage& image,
                                               const DetectionConfig& cfg) {
  validate_detection(cfg);
  const double lambda_hat = estimate_lambda(image);
  const CountImage reduced = threshold_image(image, lambda_hat);
  const double accept_threshold = lambda_hat + cfg.sigma_mult * std::sqrt(lambda_hat);

  struct Pixel {
    std::int64_t value;
    int row;
    int col;
  };
  std::vector<Pixel> pixels;
  for (int i = 0; i < reduced.rows(); ++i)
    for (int j = 0; j < reduced.cols(); ++j) {
      const std::int64_t v = reduced(i, j);
      if (v > 0 && static_cast<double>(v) > accept_threshold) pixels.push_back({v, i, j});
    }
  std::sort(pixels.begin(), pixels.end(), [](const Pixel& a, const Pixel& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });

  std::vector<PeakCandidate> accepted;
  for (const Pixel& p : pixels) {
    bool clear = true;
    for (const PeakCandidate& c : accepted) {
      if (std::max(std::abs(c.row - p.row), std::abs(c.col - p.col)) <= cfg.min_separation) {
        clear = false;
        break;
      }
    }
    if (!clear) continue;
    if (!flatness_filter(image, p.row, p.col, cfg)) continue;
    accepted.push_back({static_cast<int>(accepted.size()), p.row, p.col, p.value});
  }
  return accepted;
}

}  // namespace psrec
