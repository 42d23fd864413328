#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "psrec/classes.hpp"
#include "psrec/errors.hpp"
#include "psrec/features.hpp"
#include "psrec/granular.hpp"

namespace psrec {

// Two-level binary tree of granular ensembles over the four object classes.
//
// Level 1 separates the bright group from the faint group. Each level-2 node
// then separates its group's two classes (left: bright_ps vs bright_bkg,
// right: faint_ps vs faint_bkg). A sample is classified by exactly one path:
// level 1, then whichever level-2 node its label-1 bit selects; the final
// keep/discard decision is the XOR of the two label bits.
//
// Because each ensemble's +1 vote means "minority class" and which class is
// the minority depends on the training counts, every level records which
// label bit the +1 vote maps to (positive_bit).

struct LevelEnsemble {
  GranularModel model;
  int positive_bit = 1;  // label bit produced by a +1 vote at this level
};

struct GbtTrainConfig {
  TrainConfig level1;
  TrainConfig level2_left;
  TrainConfig level2_right;

  static GbtTrainConfig shared(const TrainConfig& cfg) { return {cfg, cfg, cfg}; }
};

struct LabeledSample {
  FeatureVector features;
  ObjectClass object_class = ObjectClass::FaintBkg;
};

class GbtModel {
 public:
  GbtModel(LevelEnsemble level1, LevelEnsemble level2_left, LevelEnsemble level2_right, int nbins)
      : level1_(std::move(level1)),
        level2_left_(std::move(level2_left)),
        level2_right_(std::move(level2_right)),
        nbins_(nbins) {
    if (nbins_ < 1) throw DomainError("GbtModel: nbins must be >= 1");
    const std::size_t dim = level1_.model.dim();
    if (level2_left_.model.dim() != dim || level2_right_.model.dim() != dim)
      throw DimensionError("GbtModel: levels disagree on feature dimension");
    if (dim != static_cast<std::size_t>(nbins_) + 4)
      throw DimensionError("GbtModel: feature dimension does not match nbins + 4");
    for (int bit : {level1_.positive_bit, level2_left_.positive_bit, level2_right_.positive_bit})
      if (bit != 0 && bit != 1) throw DomainError("GbtModel: positive_bit must be 0 or 1");
  }

  // One level-1 vote, one level-2 vote on the selected branch. The branch not
  // taken is never consulted.
  ClassCode classify(const FeatureVector& fv) const {
    const int label1 = bit_of(level1_, fv);
    const LevelEnsemble& branch = (label1 == 1) ? level2_left_ : level2_right_;
    const int label2 = bit_of(branch, fv);
    return code_from_labels(label1, label2);
  }

  // Total submodel count across all levels: the model-complexity measure
  // that undersampling keeps proportional to the class imbalance.
  int total_submodels() const {
    return static_cast<int>(level1_.model.submodels().size() +
                            level2_left_.model.submodels().size() +
                            level2_right_.model.submodels().size());
  }

  const LevelEnsemble& level1() const { return level1_; }
  const LevelEnsemble& level2_left() const { return level2_left_; }
  const LevelEnsemble& level2_right() const { return level2_right_; }
  int nbins() const { return nbins_; }
  std::size_t dim() const { return level1_.model.dim(); }

 private:
  static int bit_of(const LevelEnsemble& level, const FeatureVector& fv) {
    const int vote = level.model.vote_predict(fv);
    return (vote == +1) ? level.positive_bit : 1 - level.positive_bit;
  }

  LevelEnsemble level1_;
  LevelEnsemble level2_left_;
  LevelEnsemble level2_right_;
  int nbins_;
};

namespace detail {

// Splits samples by a label bit, trains one granular ensemble with the
// smaller side as the minority (+1) class, and records which bit +1 means.
// On an exact tie the bit-1 class is taken as the minority so the mapping
// never depends on input order.
inline LevelEnsemble train_level(const std::vector<const FeatureVector*>& bit0,
                                 const std::vector<const FeatureVector*>& bit1,
                                 const TrainConfig& cfg, const std::string& bit0_name,
                                 const std::string& bit1_name) {
  const bool minority_is_bit1 = bit1.size() <= bit0.size();
  const auto& major_ptrs = minority_is_bit1 ? bit0 : bit1;
  const auto& minor_ptrs = minority_is_bit1 ? bit1 : bit0;

  std::vector<FeatureVector> major, minor;
  major.reserve(major_ptrs.size());
  minor.reserve(minor_ptrs.size());
  for (const FeatureVector* p : major_ptrs) major.push_back(*p);
  for (const FeatureVector* p : minor_ptrs) minor.push_back(*p);

  GranularModel model =
      train_granular(major, minor, cfg, minority_is_bit1 ? bit1_name : bit0_name);
  return LevelEnsemble{std::move(model), minority_is_bit1 ? 1 : 0};
}

}  // namespace detail

inline GbtModel train_gbt(const std::vector<LabeledSample>& samples, const GbtTrainConfig& cfg) {
  if (samples.empty()) throw TrainingError("train_gbt: no training samples");
  const std::size_t dim = samples.front().features.size();
  const int nbins = static_cast<int>(samples.front().features.spec.size());
  if (nbins < 1) throw TrainingError("train_gbt: samples carry no spectrum");

  std::vector<const FeatureVector*> by_class[4];
  for (const LabeledSample& s : samples) {
    if (s.features.size() != dim)
      throw DimensionError("train_gbt: inconsistent feature dimensions");
    by_class[static_cast<int>(s.object_class)].push_back(&s.features);
  }
  for (ObjectClass c : {ObjectClass::BrightPs, ObjectClass::BrightBkg, ObjectClass::FaintPs,
                        ObjectClass::FaintBkg}) {
    if (by_class[static_cast<int>(c)].empty())
      throw TrainingError("train_gbt: class '" + to_string(c) + "' has no training samples");
  }

  const auto& bright_ps = by_class[static_cast<int>(ObjectClass::BrightPs)];
  const auto& bright_bkg = by_class[static_cast<int>(ObjectClass::BrightBkg)];
  const auto& faint_ps = by_class[static_cast<int>(ObjectClass::FaintPs)];
  const auto& faint_bkg = by_class[static_cast<int>(ObjectClass::FaintBkg)];

  // Level 1: faint group carries bit 0, bright group bit 1.
  std::vector<const FeatureVector*> faint_group = faint_ps;
  faint_group.insert(faint_group.end(), faint_bkg.begin(), faint_bkg.end());
  std::vector<const FeatureVector*> bright_group = bright_ps;
  bright_group.insert(bright_group.end(), bright_bkg.begin(), bright_bkg.end());
  LevelEnsemble level1 =
      detail::train_level(faint_group, bright_group, cfg.level1, "faint_group", "bright_group");

  // Level 2 left: bright_ps (bit 0) vs bright_bkg (bit 1).
  LevelEnsemble level2_left =
      detail::train_level(bright_ps, bright_bkg, cfg.level2_left, "bright_ps", "bright_bkg");

  // Level 2 right: faint_bkg (bit 0) vs faint_ps (bit 1).
  LevelEnsemble level2_right =
      detail::train_level(faint_bkg, faint_ps, cfg.level2_right, "faint_bkg", "faint_ps");

  return GbtModel(std::move(level1), std::move(level2_left), std::move(level2_right), nbins);
}

inline GbtModel train_gbt(const std::vector<LabeledSample>& samples, const TrainConfig& cfg) {
  return train_gbt(samples, GbtTrainConfig::shared(cfg));
}

}  // namespace psrec
