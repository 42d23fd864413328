#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psrec/errors.hpp"

namespace psrec {

// Soft-margin binary SVM with a Gaussian kernel, trained by sequential
// pairwise optimization of the dual:
//
//   maximize  W(a) = sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//   subject   0 <= a_i <= C,  sum_i a_i y_i = 0
//
// Each step picks two multipliers, solves their two-variable subproblem in
// closed form, and repeats until no sample violates the optimality conditions
// within tolerance. The pair selection follows Platt's heuristics: examine
// violators, prefer the partner with the largest error gap, fall back to
// randomized scans.

struct TrainConfig {
  double c = 1.0;                      // box constraint
  std::optional<double> gamma;         // kernel width; empty selects the data-driven default
  double tol = 1e-3;                   // optimality tolerance
  int max_passes = 200;                // sweep budget before giving up
  std::uint64_t seed = 0;              // drives the randomized fallback scans
};

inline void validate_train(const TrainConfig& cfg) {
  if (!(cfg.c > 0.0)) throw DomainError("TrainConfig: c must be > 0");
  if (cfg.gamma && !(*cfg.gamma > 0.0)) throw DomainError("TrainConfig: gamma must be > 0");
  if (!(cfg.tol > 0.0)) throw DomainError("TrainConfig: tol must be > 0");
  if (cfg.max_passes < 1) throw DomainError("TrainConfig: max_passes must be >= 1");
}

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  if (a.size() != b.size()) throw DimensionError("rbf_kernel: vector length mismatch");
  if (!(gamma > 0.0)) throw DomainError("rbf_kernel: gamma must be > 0");
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

// Default kernel width: 1 / (dim * mean per-dimension variance). On
// z-scored features this reduces to 1/dim. Degenerate all-identical input
// falls back to 1/dim as well.
inline double resolve_gamma(const std::vector<std::vector<double>>& samples,
                            const TrainConfig& cfg) {
  if (cfg.gamma) return *cfg.gamma;
  if (samples.empty()) throw TrainingError("resolve_gamma: no samples");
  const std::size_t dim = samples.front().size();
  if (dim == 0) throw DimensionError("resolve_gamma: zero-dimensional samples");
  double total_var = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s[d];
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (const auto& s : samples) {
      const double diff = s[d] - mean;
      var += diff * diff;
    }
    total_var += var / static_cast<double>(samples.size());
  }
  const double mean_var = total_var / static_cast<double>(dim);
  if (mean_var <= 0.0) return 1.0 / static_cast<double>(dim);
  return 1.0 / (static_cast<double>(dim) * mean_var);
}

// Inference-side model: support vectors with signed weights a_i * y_i plus a
// bias. Constructible from parts so deserialization and tests can build one
// directly.
class TrainedSvm {
 public:
  TrainedSvm(std::vector<std::vector<double>> support_vectors, std::vector<double> coef,
             double bias, double gamma)
      : sv_(std::move(support_vectors)), coef_(std::move(coef)), bias_(bias), gamma_(gamma) {
    if (sv_.size() != coef_.size()) throw DimensionError("TrainedSvm: sv/coef count mismatch");
    if (!(gamma_ > 0.0)) throw DomainError("TrainedSvm: gamma must be > 0");
    for (std::size_t i = 1; i < sv_.size(); ++i)
      if (sv_[i].size() != sv_[0].size())
        throw DimensionError("TrainedSvm: inconsistent support vector lengths");
  }

  double decision_value(std::span<const double> x) const {
    if (!sv_.empty() && x.size() != sv_[0].size())
      throw DimensionError("TrainedSvm: input length does not match support vectors");
    double f = bias_;
    for (std::size_t i = 0; i < sv_.size(); ++i) f += coef_[i] * rbf_kernel(sv_[i], x, gamma_);
    return f;
  }

  // Sign of the decision value; the boundary itself goes to +1.
  int predict(std::span<const double> x) const { return decision_value(x) >= 0.0 ? +1 : -1; }

  const std::vector<std::vector<double>>& support_vectors() const { return sv_; }
  const std::vector<double>& coef() const { return coef_; }
  double bias() const { return bias_; }
  double gamma() const { return gamma_; }
  std::size_t dim() const { return sv_.empty() ? 0 : sv_[0].size(); }

 private:
  std::vector<std::vector<double>> sv_;
  std::vector<double> coef_;
  double bias_;
  double gamma_;
};

// Raw solver output, exposed for diagnostics and tests.
struct SmoResult {
  std::vector<double> alpha;
  double bias = 0.0;
  double gamma = 0.0;
  int sweeps = 0;
};

namespace detail {

class SmoSolver {
 public:
  SmoSolver(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double c,
            double gamma, double tol, int max_passes, std::uint64_t seed)
      : x_(x),
        y_(y),
        n_(static_cast<int>(x.size())),
        c_(c),
        gamma_(gamma),
        tol_(tol),
        // The sweep loop enforces half the advertised tolerance. Recentering
        // the bias on the free support vectors afterwards can shift every
        // margin by at most that much again, so the class-level guarantee
        // (conditions hold within tol_) survives the recentering.
        tol_inner_(0.5 * tol),
        max_passes_(max_passes),
        rng_(seed) {
    const std::size_t nn = static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
    if (n_ <= kCacheLimit) {
      kernel_cache_.resize(nn);
      for (int i = 0; i < n_; ++i)
        for (int j = i; j < n_; ++j) {
          const double k = rbf_kernel(x_[i], x_[j], gamma_);
          kernel_cache_[idx(i, j)] = k;
          kernel_cache_[idx(j, i)] = k;
        }
    }
    alpha_.assign(static_cast<std::size_t>(n_), 0.0);
    error_.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) error_[i] = -static_cast<double>(y_[i]);
  }

  SmoResult run() {
    int sweeps = 0;
    for (;;) {
      sweep_loop(sweeps);
      refresh_errors();
      recenter_bias();
      if (kkt_clean(tol_)) break;
      // Only reachable if recentering exposed a violation; resume optimizing
      // from the shifted bias with the remaining sweep budget.
    }
    return SmoResult{alpha_, b_, gamma_, sweeps};
  }

 private:
  static constexpr int kCacheLimit = 3000;

  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(j);
  }

  double kern(int i, int j) const {
    if (!kernel_cache_.empty()) return kernel_cache_[idx(i, j)];
    return rbf_kernel(x_[i], x_[j], gamma_);
  }

  bool non_bound(int i) const { return alpha_[i] > 0.0 && alpha_[i] < c_; }

  int random_index() { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n_)); }

  void sweep_loop(int& sweeps) {
    bool examine_all = true;
    int changed = 0;
    while (changed > 0 || examine_all) {
      if (++sweeps > max_passes_) {
        refresh_errors();
        throw ConvergenceError("svm training did not converge: " + std::to_string(max_passes_) +
                                   " sweeps exhausted with " +
                                   std::to_string(count_violations(tol_)) +
                                   " samples still violating tolerance " + std::to_string(tol_),
                               sweeps - 1, count_violations(tol_));
      }
      changed = 0;
      if (examine_all) {
        for (int i = 0; i < n_; ++i) changed += examine(i);
      } else {
        for (int i = 0; i < n_; ++i)
          if (non_bound(i)) changed += examine(i);
      }
      if (examine_all)
        examine_all = false;
      else if (changed == 0)
        examine_all = true;
    }
  }

  int examine(int i2) {
    const double y2 = y_[i2];
    const double a2 = alpha_[i2];
    const double e2 = error_[i2];
    const double r2 = e2 * y2;
    const bool violates = (r2 < -tol_inner_ && a2 < c_) || (r2 > tol_inner_ && a2 > 0.0);
    if (!violates) return 0;

    // Heuristic 1: the non-bound partner with the largest error gap.
    int best = -1;
    double best_gap = -1.0;
    for (int i = 0; i < n_; ++i) {
      if (i == i2 || !non_bound(i)) continue;
      const double gap = std::fabs(error_[i] - e2);
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best >= 0 && take_step(best, i2)) return 1;

    // Heuristic 2: every non-bound sample, randomized start.
    int start = random_index();
    for (int k = 0; k < n_; ++k) {
      const int i = (start + k) % n_;
      if (i == i2 || !non_bound(i)) continue;
      if (take_step(i, i2)) return 1;
    }

    // Heuristic 3: everything, randomized start.
    start = random_index();
    for (int k = 0; k < n_; ++k) {
      const int i = (start + k) % n_;
      if (i == i2) continue;
      if (take_step(i, i2)) return 1;
    }
    return 0;
  }

  bool take_step(int i1, int i2) {
    const double a1 = alpha_[i1], a2 = alpha_[i2];
    const double y1 = y_[i1], y2 = y_[i2];
    const double e1 = error_[i1], e2 = error_[i2];
    const double s = y1 * y2;

    double lo, hi;
    if (y_[i1] != y_[i2]) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(c_, c_ + a2 - a1);
    } else {
      lo = std::max(0.0, a1 + a2 - c_);
      hi = std::min(c_, a1 + a2);
    }
    if (lo >= hi) return false;

    const double k11 = kern(i1, i1), k12 = kern(i1, i2), k22 = kern(i2, i2);
    const double eta = k11 + k22 - 2.0 * k12;
    double a2new;
    if (eta > 0.0) {
      a2new = std::clamp(a2 + y2 * (e1 - e2) / eta, lo, hi);
    } else {
      // Coincident points make the subproblem linear; compare the objective
      // at both ends of the feasible segment. (e_i - b_) is the raw kernel
      // expansion minus the label, independent of the current bias.
      const double f1 = y1 * (e1 - b_) - a1 * k11 - s * a2 * k12;
      const double f2 = y2 * (e2 - b_) - s * a1 * k12 - a2 * k22;
      const double l1 = a1 + s * (a2 - lo);
      const double h1 = a1 + s * (a2 - hi);
      const double obj_lo =
          l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 + s * lo * l1 * k12;
      const double obj_hi =
          h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 + s * hi * h1 * k12;
      if (obj_lo < obj_hi - 1e-12)
        a2new = lo;
      else if (obj_lo > obj_hi + 1e-12)
        a2new = hi;
      else
        return false;
    }
    // Park near-edge values exactly on the box edge. Round-off debris a few
    // ulps inside the box would otherwise read as a free vector whose
    // condition (margin == 1) can never hold, while every step onto the edge
    // stays below the minimum-progress threshold: a permanent stall.
    const double snap = 1e-10 * c_;
    if (a2new < snap)
      a2new = 0.0;
    else if (a2new > c_ - snap)
      a2new = c_;
    if (std::fabs(a2new - a2) < 1e-12 * (a2new + a2 + 1e-12)) return false;

    double a1new = a1 + s * (a2 - a2new);
    if (a1new < snap)
      a1new = 0.0;
    else if (a1new > c_ - snap)
      a1new = c_;
    const double d1 = a1new - a1, d2 = a2new - a2;

    const double b1 = b_ - e1 - y1 * d1 * k11 - y2 * d2 * k12;
    const double b2 = b_ - e2 - y1 * d1 * k12 - y2 * d2 * k22;
    double bnew;
    if (a1new > 0.0 && a1new < c_)
      bnew = b1;
    else if (a2new > 0.0 && a2new < c_)
      bnew = b2;
    else
      bnew = 0.5 * (b1 + b2);
    const double db = bnew - b_;

    alpha_[i1] = a1new;
    alpha_[i2] = a2new;
    b_ = bnew;
    for (int k = 0; k < n_; ++k)
      error_[k] += y1 * d1 * kern(i1, k) + y2 * d2 * kern(i2, k) + db;
    return true;
  }

  // Decision value minus the bias, straight from the multipliers.
  double margin_raw(int i) const {
    double f = 0.0;
    for (int j = 0; j < n_; ++j)
      if (alpha_[j] > 0.0) f += alpha_[j] * y_[j] * kern(j, i);
    return f;
  }

  void refresh_errors() {
    for (int i = 0; i < n_; ++i) error_[i] = margin_raw(i) + b_ - y_[i];
  }

  // Final bias: average over free support vectors of the exact value that
  // zeroes their error. With no free vector the bias is only constrained to
  // an interval by the bound samples; the midpoint is the minimax choice and
  // keeps the running value from sitting outside the interval forever.
  void recenter_bias() {
    double acc = 0.0;
    int free_count = 0;
    for (int i = 0; i < n_; ++i) {
      if (!non_bound(i)) continue;
      acc += y_[i] - margin_raw(i);
      ++free_count;
    }
    double bnew;
    if (free_count > 0) {
      bnew = acc / free_count;
    } else {
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n_; ++i) {
        const double edge = y_[i] - margin_raw(i);  // b making this margin exactly 1
        const bool wants_ge = (alpha_[i] <= 0.0) == (y_[i] > 0);
        if (wants_ge)
          lo = std::max(lo, edge);
        else
          hi = std::min(hi, edge);
      }
      // Both classes are present, so both sides are finite.
      bnew = 0.5 * (lo + hi);
    }
    const double db = bnew - b_;
    b_ = bnew;
    for (int i = 0; i < n_; ++i) error_[i] += db;
  }

  int count_violations(double tol) const {
    int v = 0;
    for (int i = 0; i < n_; ++i) {
      const double margin = y_[i] * (margin_raw(i) + b_);
      if (alpha_[i] <= 0.0) {
        if (margin < 1.0 - tol) ++v;
      } else if (alpha_[i] >= c_) {
        if (margin > 1.0 + tol) ++v;
      } else {
        if (std::fabs(margin - 1.0) > tol) ++v;
      }
    }
    return v;
  }

  bool kkt_clean(double tol) const { return count_violations(tol) == 0; }

  const std::vector<std::vector<double>>& x_;
  const std::vector<int>& y_;
  int n_;
  double c_;
  double gamma_;
  double tol_;
  double tol_inner_;
  int max_passes_;
  std::mt19937_64 rng_;
  std::vector<double> kernel_cache_;
  std::vector<double> alpha_;
  std::vector<double> error_;
  double b_ = 0.0;
};

}  // namespace detail

inline void validate_problem(const std::vector<std::vector<double>>& samples,
                             const std::vector<int>& labels) {
  if (samples.empty()) throw TrainingError("svm: no training samples");
  if (samples.size() != labels.size())
    throw DimensionError("svm: sample/label count mismatch");
  const std::size_t dim = samples.front().size();
  if (dim == 0) throw DimensionError("svm: zero-dimensional samples");
  for (const auto& s : samples)
    if (s.size() != dim) throw DimensionError("svm: inconsistent sample lengths");
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == +1)
      pos = true;
    else if (y == -1)
      neg = true;
    else
      throw TrainingError("svm: labels must be +1 or -1");
  }
  if (!pos || !neg) throw TrainingError("svm: both classes must be present");
}

inline SmoResult solve_dual(const std::vector<std::vector<double>>& samples,
                            const std::vector<int>& labels, const TrainConfig& cfg) {
  validate_train(cfg);
  validate_problem(samples, labels);
  const double gamma = resolve_gamma(samples, cfg);
  detail::SmoSolver solver(samples, labels, cfg.c, gamma, cfg.tol, cfg.max_passes, cfg.seed);
  return solver.run();
}

inline TrainedSvm train_svm(const std::vector<std::vector<double>>& samples,
                            const std::vector<int>& labels, const TrainConfig& cfg) {
  const SmoResult r = solve_dual(samples, labels, cfg);
  std::vector<std::vector<double>> sv;
  std::vector<double> coef;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (r.alpha[i] > 0.0) {
      sv.push_back(samples[i]);
      coef.push_back(r.alpha[i] * labels[i]);
    }
  }
  return TrainedSvm(std::move(sv), std::move(coef), r.bias, r.gamma);
}

// Dual objective W(a) for a candidate multiplier vector; shared by tests and
// diagnostics rather than reimplemented in each.
inline double dual_objective(const std::vector<std::vector<double>>& samples,
                             const std::vector<int>& labels, const std::vector<double>& alpha,
                             double gamma) {
  const std::size_t n = samples.size();
  if (labels.size() != n || alpha.size() != n)
    throw DimensionError("dual_objective: size mismatch");
  double w = 0.0;
  for (std::size_t i = 0; i < n; ++i) w += alpha[i];
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (alpha[j] == 0.0) continue;
      w -= 0.5 * alpha[i] * alpha[j] * labels[i] * labels[j] * rbf_kernel(samples[i], samples[j], gamma);
    }
  }
  return w;
}

}  // namespace psrec
