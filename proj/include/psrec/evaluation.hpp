#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "psrec/classes.hpp"
#include "psrec/errors.hpp"
#include "psrec/events.hpp"
#include "psrec/gbt.hpp"
#include "psrec/peaks.hpp"
#include "psrec/pipeline.hpp"

namespace psrec {

// Scoring of detections and classifications against ground truth.
//
// Accuracy counts a processed candidate as correct when the keep/discard
// decision agrees with reality: kept and it really is a point source, or
// discarded and it is not. Precision/recall are computed from the per-level
// confusion counts averaged across the three tree levels.

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
};

// One-to-one greedy matching, closest pair first. Ties on distance resolve
// by candidate rank then truth index, so the outcome is independent of the
// order the candidate list arrives in.
struct MatchResult {
  int n_true = 0;    // candidates matched to a truth position
  int n_false = 0;   // candidates left unmatched
  int n_missed = 0;  // truth positions left unmatched
  std::vector<int> candidate_to_truth;  // per candidate: truth index or -1
};

inline MatchResult match_detections(const std::vector<PeakCandidate>& candidates,
                                    const std::vector<std::pair<double, double>>& truth_rc,
                                    double radius) {
  if (radius < 0.0) throw DomainError("match_detections: radius must be >= 0");
  struct Pair {
    double dist;
    int cand;
    int truth;
  };
  std::vector<Pair> pairs;
  for (std::size_t c = 0; c < candidates.size(); ++c)
    for (std::size_t t = 0; t < truth_rc.size(); ++t) {
      const double dist = std::max(std::fabs(candidates[c].row - truth_rc[t].first),
                                   std::fabs(candidates[c].col - truth_rc[t].second));
      if (dist <= radius) pairs.push_back({dist, static_cast<int>(c), static_cast<int>(t)});
    }
  std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (candidates[a.cand].rank != candidates[b.cand].rank)
      return candidates[a.cand].rank < candidates[b.cand].rank;
    return a.truth < b.truth;
  });

  MatchResult result;
  result.candidate_to_truth.assign(candidates.size(), -1);
  std::vector<char> truth_taken(truth_rc.size(), 0);
  std::vector<char> cand_taken(candidates.size(), 0);
  for (const Pair& p : pairs) {
    if (cand_taken[p.cand] || truth_taken[p.truth]) continue;
    cand_taken[p.cand] = 1;
    truth_taken[p.truth] = 1;
    result.candidate_to_truth[p.cand] = p.truth;
  }
  result.n_true = static_cast<int>(std::count(cand_taken.begin(), cand_taken.end(), 1));
  result.n_false = static_cast<int>(candidates.size()) - result.n_true;
  result.n_missed = static_cast<int>(truth_rc.size()) -
                    static_cast<int>(std::count(truth_taken.begin(), truth_taken.end(), 1));
  return result;
}

// Fraction of processed samples whose keep/discard decision was right.
inline double accuracy(std::int64_t n_correct_ps, std::int64_t n_correct_bkg,
                       std::int64_t n_samples) {
  if (n_samples <= 0) throw DomainError("accuracy: n_samples must be > 0");
  if (n_correct_ps < 0 || n_correct_bkg < 0 || n_correct_ps + n_correct_bkg > n_samples)
    throw DomainError("accuracy: correct counts exceed sample count");
  return static_cast<double>(n_correct_ps + n_correct_bkg) / static_cast<double>(n_samples);
}

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// Mean true/false positives and false negatives across the three levels, then
// the usual ratios. Throws when a denominator vanishes; the caller decides
// how to report that.
inline PrecisionRecall precision_recall(const std::array<ConfusionCounts, 3>& per_level) {
  double tp = 0.0, fp = 0.0, fn = 0.0;
  for (const ConfusionCounts& c : per_level) {
    tp += static_cast<double>(c.tp);
    fp += static_cast<double>(c.fp);
    fn += static_cast<double>(c.fn);
  }
  tp /= 3.0;
  fp /= 3.0;
  fn /= 3.0;
  if (tp + fp == 0.0) throw UndefinedMetricError("precision undefined: no positive predictions");
  if (tp + fn == 0.0) throw UndefinedMetricError("recall undefined: no positive ground truth");
  return PrecisionRecall{tp / (tp + fp), tp / (tp + fn)};
}

struct EvalReport {
  // Headline metrics.
  bool accuracy_defined = false;
  double accuracy = 0.0;
  bool pr_defined = false;
  double precision = 0.0;
  double recall = 0.0;

  // Decision bookkeeping.
  std::int64_t n_candidates = 0;
  std::int64_t n_correct_ps = 0;
  std::int64_t n_correct_bkg = 0;

  // Detection bookkeeping (against point-source truth only).
  int n_ref = 0;
  int n_true_det = 0;
  int n_false_det = 0;
  int n_missed_det = 0;

  // Per-level confusion: [0] level 1, [1] level 2 left, [2] level 2 right.
  std::array<ConfusionCounts, 3> per_level{};
};

namespace detail {

inline void finalize_metrics(EvalReport& report) {
  report.accuracy_defined = report.n_candidates > 0;
  report.accuracy = report.accuracy_defined
                        ? accuracy(report.n_correct_ps, report.n_correct_bkg, report.n_candidates)
                        : 0.0;
  try {
    const PrecisionRecall pr = precision_recall(report.per_level);
    report.precision = pr.precision;
    report.recall = pr.recall;
    report.pr_defined = true;
  } catch (const UndefinedMetricError&) {
    report.pr_defined = false;
    report.precision = 0.0;
    report.recall = 0.0;
  }
}

inline void score_level(ConfusionCounts& counts, int predicted, int actual) {
  if (predicted == 1 && actual == 1)
    ++counts.tp;
  else if (predicted == 1 && actual == 0)
    ++counts.fp;
  else if (predicted == 0 && actual == 0)
    ++counts.tn;
  else
    ++counts.fn;
}

}  // namespace detail

// Runs the full pipeline on one scene and scores it: detect candidates,
// classify each, compare keep/discard decisions with the point-source truth,
// and fill the per-level confusion from the class truth (candidates matching
// no truth position count as faint background).
inline EvalReport evaluate_pipeline(const GbtModel& model, const EventTable& table,
                                    const std::vector<TruthSource>& truth,
                                    const EnergyBand& band, const DetectionConfig& detection,
                                    double match_radius) {
  const CountImage image = bin_image(table, band);
  const double lambda_hat = estimate_lambda(image);
  const std::vector<PeakCandidate> candidates = detect_peaks(image, detection);

  // Matching A: against point-source truth, defines detection counts and
  // decision correctness.
  std::vector<std::pair<double, double>> ps_rc;
  for (const TruthSource& t : truth)
    if (is_point_source(t.object_class))
      ps_rc.emplace_back(std::floor(t.y), std::floor(t.x));
  const MatchResult ps_match = match_detections(candidates, ps_rc, match_radius);

  // Matching B: against every truth position, defines the class ground truth
  // for the per-level confusion counts.
  std::vector<std::pair<double, double>> all_rc;
  for (const TruthSource& t : truth) all_rc.emplace_back(std::floor(t.y), std::floor(t.x));
  const MatchResult class_match = match_detections(candidates, all_rc, match_radius);

  EvalReport report;
  report.n_candidates = static_cast<std::int64_t>(candidates.size());
  report.n_ref = static_cast<int>(ps_rc.size());
  report.n_true_det = ps_match.n_true;
  report.n_false_det = ps_match.n_false;
  report.n_missed_det = ps_match.n_missed;

  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const FeatureVector fv = position_features(table, image, lambda_hat, candidates[c].row,
                                               candidates[c].col, band, detection.window);
    const ClassCode predicted = model.classify(fv);

    const bool is_ps_truth = ps_match.candidate_to_truth[c] >= 0;
    if (predicted.decision == 1 && is_ps_truth)
      ++report.n_correct_ps;
    else if (predicted.decision == 0 && !is_ps_truth)
      ++report.n_correct_bkg;

    const int truth_idx = class_match.candidate_to_truth[c];
    const ObjectClass actual =
        truth_idx >= 0 ? truth[static_cast<std::size_t>(truth_idx)].object_class
                       : ObjectClass::FaintBkg;
    detail::score_level(report.per_level[0], predicted.label1, label1_of(actual));
    if (predicted.label1 == 1)
      detail::score_level(report.per_level[1], predicted.label2, label2_of(actual));
    else
      detail::score_level(report.per_level[2], predicted.label2, label2_of(actual));
  }

  detail::finalize_metrics(report);
  return report;
}

// Combines per-scene reports by summing raw counts and recomputing metrics.
inline EvalReport merge_reports(std::span<const EvalReport> reports) {
  EvalReport merged;
  for (const EvalReport& r : reports) {
    merged.n_candidates += r.n_candidates;
    merged.n_correct_ps += r.n_correct_ps;
    merged.n_correct_bkg += r.n_correct_bkg;
    merged.n_ref += r.n_ref;
    merged.n_true_det += r.n_true_det;
    merged.n_false_det += r.n_false_det;
    merged.n_missed_det += r.n_missed_det;
    for (std::size_t l = 0; l < 3; ++l) {
      merged.per_level[l].tp += r.per_level[l].tp;
      merged.per_level[l].fp += r.per_level[l].fp;
      merged.per_level[l].tn += r.per_level[l].tn;
      merged.per_level[l].fn += r.per_level[l].fn;
    }
  }
  detail::finalize_metrics(merged);
  return merged;
}

inline std::string report_text(const EvalReport& r) {
  std::ostringstream out;
  out << "candidates processed: " << r.n_candidates << '\n';
  out << "detection: " << r.n_true_det << " matched / " << r.n_false_det << " spurious / "
      << r.n_missed_det << " missed (of " << r.n_ref << " reference point sources)\n";
  out << "correct decisions: " << r.n_correct_ps << " kept + " << r.n_correct_bkg
      << " discarded\n";
  if (r.accuracy_defined)
    out << "accuracy: " << detail::format_double(r.accuracy) << '\n';
  else
    out << "accuracy: undefined (no candidates)\n";
  if (r.pr_defined)
    out << "precision: " << detail::format_double(r.precision)
        << "\nrecall: " << detail::format_double(r.recall) << '\n';
  else
    out << "precision: undefined\nrecall: undefined\n";
  static const char* kLevelNames[3] = {"level1", "level2_left", "level2_right"};
  for (std::size_t l = 0; l < 3; ++l) {
    const ConfusionCounts& c = r.per_level[l];
    out << kLevelNames[l] << ": tp=" << c.tp << " fp=" << c.fp << " tn=" << c.tn
        << " fn=" << c.fn << '\n';
  }
  return out.str();
}

inline std::string report_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "metric,value\n";
  out << "accuracy," << (r.accuracy_defined ? detail::format_double(r.accuracy) : "undefined")
      << '\n';
  out << "precision," << (r.pr_defined ? detail::format_double(r.precision) : "undefined")
      << '\n';
  out << "recall," << (r.pr_defined ? detail::format_double(r.recall) : "undefined") << '\n';
  out << "n_candidates," << r.n_candidates << '\n';
  out << "n_correct_ps," << r.n_correct_ps << '\n';
  out << "n_correct_bkg," << r.n_correct_bkg << '\n';
  out << "n_ref," << r.n_ref << '\n';
  out << "n_true_det," << r.n_true_det << '\n';
  out << "n_false_det," << r.n_false_det << '\n';
  out << "n_missed_det," << r.n_missed_det << '\n';
  static const char* kLevelNames[3] = {"level1", "level2_left", "level2_right"};
  for (std::size_t l = 0; l < 3; ++l) {
    const ConfusionCounts& c = r.per_level[l];
    out << kLevelNames[l] << "_tp," << c.tp << '\n';
    out << kLevelNames[l] << "_fp," << c.fp << '\n';
    out << kLevelNames[l] << "_tn," << c.tn << '\n';
    out << kLevelNames[l] << "_fn," << c.fn << '\n';
  }
  return out.str();
}

}  // namespace psrec
