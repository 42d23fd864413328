#pragma once

#include <vector>

#include "psrec/classes.hpp"
#include "psrec/events.hpp"
#include "psrec/features.hpp"
#include "psrec/gbt.hpp"
#include "psrec/peaks.hpp"

namespace psrec {

// Feature extraction for one position, shared by training and inference so
// both sides see identical inputs: window around the position, per-pixel
// normalized spectrum, spatial summaries against the scene's global rate.
inline FeatureVector position_features(const EventTable& table, const CountImage& image,
                                       double lambda_hat, int row, int col,
                                       const EnergyBand& band, int window) {
  const RegionPatch patch = extract_region(image, row, col, window);
  std::vector<double> spectrum = extract_spectrum(table, patch, band);
  return assemble_features(patch, std::move(spectrum), lambda_hat);
}

// Training-sample assembly for one scene's labeled positions.
inline std::vector<LabeledSample> extract_labeled_samples(const EventTable& table,
                                                          const std::vector<LabeledPosition>& labels,
                                                          const EnergyBand& band, int window) {
  const CountImage image = bin_image(table, band);
  const double lambda_hat = estimate_lambda(image);
  std::vector<LabeledSample> samples;
  samples.reserve(labels.size());
  for (const LabeledPosition& lp : labels) {
    LabeledSample s;
    s.features = position_features(table, image, lambda_hat, lp.row, lp.col, band, window);
    s.object_class = lp.object_class;
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace psrec
