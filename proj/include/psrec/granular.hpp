#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psrec/errors.hpp"
#include "psrec/features.hpp"
#include "psrec/svm.hpp"

namespace psrec {

// Class-imbalance handling by undersampling the majority class: the majority
// samples are dealt round-robin into floor(n_major / n_minor) granules, each
// granule is paired with the full minority set to train one balanced
// submodel, and predictions are made by majority vote across submodels. The
// minority class is always the +1 label.

inline int granule_count(int n_major, int n_minor) {
  if (n_major <= 0 || n_minor <= 0)
    throw DomainError("granule_count: both class sizes must be > 0");
  return std::max(1, n_major / n_minor);
}

// Deals indices 0..n_major-1 into n_granules strided slices: index i goes to
// granule i mod n_granules. Slices are disjoint, cover everything, and their
// sizes differ by at most one.
inline std::vector<std::vector<int>> split_major(int n_major, int n_granules) {
  if (n_major < 0) throw DomainError("split_major: n_major must be >= 0");
  if (n_granules < 1) throw DomainError("split_major: n_granules must be >= 1");
  std::vector<std::vector<int>> granules(static_cast<std::size_t>(n_granules));
  for (int i = 0; i < n_major; ++i)
    granules[static_cast<std::size_t>(i % n_granules)].push_back(i);
  return granules;
}

class GranularModel {
 public:
  GranularModel(std::vector<TrainedSvm> submodels, FeatureScaler scaler,
                std::string positive_label_meaning)
      : submodels_(std::move(submodels)),
        scaler_(std::move(scaler)),
        positive_label_meaning_(std::move(positive_label_meaning)) {
    if (submodels_.empty()) throw TrainingError("GranularModel: needs at least one submodel");
  }

  // Majority vote over the submodels; an exact tie resolves to +1, the
  // minority side, which is the costlier one to miss.
  int vote_predict_scaled(std::span<const double> scaled) const {
    int plus = 0;
    for (const TrainedSvm& m : submodels_)
      if (m.predict(scaled) == +1) ++plus;
    return 2 * plus >= static_cast<int>(submodels_.size()) ? +1 : -1;
  }

  int vote_predict(const FeatureVector& fv) const {
    return vote_predict_scaled(scaler_.apply(fv));
  }

  const std::vector<TrainedSvm>& submodels() const { return submodels_; }
  const FeatureScaler& scaler() const { return scaler_; }
  const std::string& positive_label_meaning() const { return positive_label_meaning_; }
  std::size_t dim() const { return scaler_.dim(); }

 private:
  std::vector<TrainedSvm> submodels_;
  FeatureScaler scaler_;
  std::string positive_label_meaning_;
};

// Trains the ensemble. The scaler is fitted on major + minor together before
// any submodel sees data, so every submodel lives in the same coordinates.
inline GranularModel train_granular(const std::vector<FeatureVector>& major,
                                    const std::vector<FeatureVector>& minor,
                                    const TrainConfig& cfg,
                                    std::string positive_label_meaning) {
  if (major.empty() || minor.empty())
    throw TrainingError("train_granular: both classes must be non-empty");

  std::vector<std::vector<double>> rows;
  rows.reserve(major.size() + minor.size());
  for (const FeatureVector& fv : major) rows.push_back(fv.flatten());
  for (const FeatureVector& fv : minor) rows.push_back(fv.flatten());
  const FeatureScaler scaler = FeatureScaler::fit(rows);

  std::vector<std::vector<double>> major_scaled, minor_scaled;
  major_scaled.reserve(major.size());
  minor_scaled.reserve(minor.size());
  for (std::size_t i = 0; i < major.size(); ++i) major_scaled.push_back(scaler.apply(rows[i]));
  for (std::size_t i = major.size(); i < rows.size(); ++i)
    minor_scaled.push_back(scaler.apply(rows[i]));

  const int n_gra = granule_count(static_cast<int>(major.size()), static_cast<int>(minor.size()));
  const auto granules = split_major(static_cast<int>(major.size()), n_gra);

  std::vector<TrainedSvm> submodels;
  submodels.reserve(granules.size());
  for (std::size_t g = 0; g < granules.size(); ++g) {
    std::vector<std::vector<double>> samples;
    std::vector<int> labels;
    samples.reserve(granules[g].size() + minor_scaled.size());
    for (int i : granules[g]) {
      samples.push_back(major_scaled[static_cast<std::size_t>(i)]);
      labels.push_back(-1);
    }
    for (const auto& s : minor_scaled) {
      samples.push_back(s);
      labels.push_back(+1);
    }
    TrainConfig sub_cfg = cfg;
    sub_cfg.seed = cfg.seed + g;  // distinct scan order per granule, still reproducible
    try {
      submodels.push_back(train_svm(samples, labels, sub_cfg));
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("granule " + std::to_string(g) + ": " + e.what(), e.sweeps(),
                             e.open_violations());
    } catch (const TrainingError& e) {
      throw TrainingError("granule " + std::to_string(g) + ": " + e.what());
    }
  }
  return GranularModel(std::move(submodels), scaler, std::move(positive_label_meaning));
}

}  // namespace psrec
