#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "psrec/errors.hpp"
#include "psrec/events.hpp"

namespace psrec {

// Spatial summaries of a candidate region. All use the patch counts only:
//
//   f_cpp  mean count per pixel
//   f_par  center count over mean count (peakedness)
//   f_var  population variance of the counts
//   f_nop  number of local plateaus above the background rate
//
// Together with the normalized spectrum they form the classifier input.

inline double f_cpp(const RegionPatch& patch) {
  const CountImage& r = patch.counts();
  return static_cast<double>(r.total()) /
         (static_cast<double>(r.rows()) * static_cast<double>(r.cols()));
}

inline double f_par(const RegionPatch& patch) {
  const double mean = f_cpp(patch);
  if (mean == 0.0)
    throw DomainError("f_par: patch has no counts, peak-to-average ratio undefined");
  return static_cast<double>(patch.center_value()) / mean;
}

inline double f_var(const RegionPatch& patch) {
  const CountImage& r = patch.counts();
  const double mean = f_cpp(patch);
  double acc = 0.0;
  for (int i = 0; i < r.rows(); ++i)
    for (int j = 0; j < r.cols(); ++j) {
      const double d = static_cast<double>(r(i, j)) - mean;
      acc += d * d;
    }
  return acc / (static_cast<double>(r.rows()) * static_cast<double>(r.cols()));
}

// Counts 8-connected components of equal-valued pixels that (a) sit strictly
// above lambda_hat and (b) dominate every pixel touching the component. A
// component spanning several pixels is one plateau; a border component with
// no outside neighbors dominates vacuously.
inline int f_nop(const RegionPatch& patch, double lambda_hat) {
  if (lambda_hat < 0.0) throw DomainError("f_nop: lambda_hat must be >= 0");
  const CountImage& r = patch.counts();
  const int rows = r.rows(), cols = r.cols();
  std::vector<char> visited(static_cast<std::size_t>(rows) * cols, 0);
  const auto at = [cols](int i, int j) { return static_cast<std::size_t>(i) * cols + j; };

  int plateaus = 0;
  std::vector<std::pair<int, int>> stack;
  for (int si = 0; si < rows; ++si)
    for (int sj = 0; sj < cols; ++sj) {
      if (visited[at(si, sj)]) continue;
      const std::int64_t level = r(si, sj);
      if (static_cast<double>(level) <= lambda_hat) continue;

      bool dominant = true;
      stack.clear();
      stack.emplace_back(si, sj);
      visited[at(si, sj)] = 1;
      while (!stack.empty()) {
        const auto [i, j] = stack.back();
        stack.pop_back();
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            const int ni = i + di, nj = j + dj;
            if (!r.contains(ni, nj)) continue;
            const std::int64_t nv = r(ni, nj);
            if (nv == level) {
              if (!visited[at(ni, nj)]) {
                visited[at(ni, nj)] = 1;
                stack.emplace_back(ni, nj);
              }
            } else if (nv > level) {
              dominant = false;
            }
          }
      }
      if (dominant) ++plateaus;
    }
  return plateaus;
}

// Classifier input: normalized spectrum first, then the four spatial values.
struct FeatureVector {
  std::vector<double> spec;
  double cpp = 0.0;
  double par = 0.0;
  double var = 0.0;
  int nop = 0;

  std::size_t size() const { return spec.size() + 4; }

  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(size());
    out.insert(out.end(), spec.begin(), spec.end());
    out.push_back(cpp);
    out.push_back(par);
    out.push_back(var);
    out.push_back(static_cast<double>(nop));
    return out;
  }

  static FeatureVector unflatten(std::span<const double> flat, int nbins) {
    if (nbins < 0 || flat.size() != static_cast<std::size_t>(nbins) + 4)
      throw DimensionError("FeatureVector: flat length does not match nbins + 4");
    FeatureVector fv;
    fv.spec.assign(flat.begin(), flat.begin() + nbins);
    fv.cpp = flat[nbins];
    fv.par = flat[static_cast<std::size_t>(nbins) + 1];
    fv.var = flat[static_cast<std::size_t>(nbins) + 2];
    fv.nop = static_cast<int>(std::llround(flat[static_cast<std::size_t>(nbins) + 3]));
    return fv;
  }
};

inline FeatureVector assemble_features(const RegionPatch& patch, std::vector<double> spectrum,
                                       double lambda_hat) {
  if (spectrum.empty()) throw DimensionError("assemble_features: empty spectrum");
  FeatureVector fv;
  fv.spec = std::move(spectrum);
  fv.cpp = f_cpp(patch);
  fv.par = f_par(patch);
  fv.var = f_var(patch);
  fv.nop = f_nop(patch, lambda_hat);
  return fv;
}

// Per-dimension z-scoring fitted on a training set. Dimensions with zero
// variance keep their offset but divide by 1 so they map to exactly zero
// instead of NaN.
class FeatureScaler {
 public:
  FeatureScaler() = default;

  FeatureScaler(std::vector<double> mean, std::vector<double> stddev)
      : mean_(std::move(mean)), stddev_(std::move(stddev)) {
    if (mean_.size() != stddev_.size() || mean_.empty())
      throw DimensionError("FeatureScaler: mean/stddev size mismatch");
    for (double s : stddev_)
      if (!(s > 0.0)) throw DomainError("FeatureScaler: stddev entries must be > 0");
  }

  static FeatureScaler fit(const std::vector<std::vector<double>>& rows) {
    if (rows.size() < 2) throw TrainingError("FeatureScaler: need at least 2 vectors to fit");
    const std::size_t dim = rows.front().size();
    if (dim == 0) throw DimensionError("FeatureScaler: zero-dimensional input");
    for (const auto& r : rows)
      if (r.size() != dim) throw DimensionError("FeatureScaler: inconsistent vector lengths");

    std::vector<double> mean(dim, 0.0), stddev(dim, 0.0);
    for (const auto& r : rows)
      for (std::size_t d = 0; d < dim; ++d) mean[d] += r[d];
    for (double& m : mean) m /= static_cast<double>(rows.size());
    for (const auto& r : rows)
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = r[d] - mean[d];
        stddev[d] += diff * diff;
      }
    for (double& s : stddev) {
      s = std::sqrt(s / static_cast<double>(rows.size()));  // population, matches f_var
      if (s == 0.0) s = 1.0;
    }
    return FeatureScaler(std::move(mean), std::move(stddev));
  }

  static FeatureScaler fit_features(const std::vector<FeatureVector>& vectors) {
    std::vector<std::vector<double>> rows;
    rows.reserve(vectors.size());
    for (const FeatureVector& fv : vectors) rows.push_back(fv.flatten());
    return fit(rows);
  }

  std::vector<double> apply(std::span<const double> v) const {
    if (v.size() != mean_.size())
      throw DimensionError("FeatureScaler: vector length does not match fitted dimension");
    std::vector<double> out(v.size());
    for (std::size_t d = 0; d < v.size(); ++d) out[d] = (v[d] - mean_[d]) / stddev_[d];
    return out;
  }

  std::vector<double> apply(const FeatureVector& fv) const { return apply(fv.flatten()); }

  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return stddev_; }

 private:
  std::vector<double> mean_;
  std::vector<double> stddev_;
};

}  // namespace psrec
