#include "psrec/svm.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracle_utils.hpp"

namespace {

using psrec::ConvergenceError;
using psrec::DimensionError;
using psrec::DomainError;
using psrec::SmoResult;
using psrec::TrainConfig;
using psrec::TrainedSvm;
using psrec::TrainingError;

struct Problem {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
};

Problem random_problem(std::mt19937_64& rng, int n, int dim) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Problem p;
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(dim);
    for (double& v : row) v = u(rng);
    p.x.push_back(row);
    p.y.push_back(i < n / 2 ? -1 : 1);
  }
  // Guarantee both classes regardless of n.
  p.y.front() = -1;
  p.y.back() = 1;
  return p;
}

TEST(RbfKernel, UnitDistanceValue) {
  const std::vector<double> a{0.0, 0.0};
  const std::vector<double> b{1.0, 0.0};
  EXPECT_DOUBLE_EQ(psrec::rbf_kernel(a, b, 1.0), std::exp(-1.0));
  EXPECT_DOUBLE_EQ(psrec::rbf_kernel(a, b, 0.5), std::exp(-0.5));
}

TEST(RbfKernel, IdentityAndSymmetry) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int round = 0; round < 20; ++round) {
    std::vector<double> a(5), b(5);
    for (double& v : a) v = u(rng);
    for (double& v : b) v = u(rng);
    EXPECT_DOUBLE_EQ(psrec::rbf_kernel(a, a, 0.7), 1.0);
    EXPECT_DOUBLE_EQ(psrec::rbf_kernel(a, b, 0.7), psrec::rbf_kernel(b, a, 0.7));
    EXPECT_GT(psrec::rbf_kernel(a, b, 0.7), 0.0);
    EXPECT_LE(psrec::rbf_kernel(a, b, 0.7), 1.0);
  }
}

TEST(RbfKernel, DimensionMismatchThrows) {
  const std::vector<double> a{0.0, 0.0};
  const std::vector<double> b{1.0};
  EXPECT_THROW(psrec::rbf_kernel(a, b, 1.0), DimensionError);
}

TEST(ResolveGamma, ExplicitValueWins) {
  TrainConfig cfg;
  cfg.gamma = 0.25;
  EXPECT_DOUBLE_EQ(psrec::resolve_gamma({{0.0}, {1.0}}, cfg), 0.25);
}

TEST(ResolveGamma, AutoUsesMeanPerDimensionVariance) {
  // Two dims with population variances 1 and 4: mean 2.5, d = 2,
  // gamma = 1 / (2 * 2.5) = 0.2.
  TrainConfig cfg;
  const std::vector<std::vector<double>> rows = {{0.0, 0.0}, {2.0, 4.0}};
  EXPECT_DOUBLE_EQ(psrec::resolve_gamma(rows, cfg), 0.2);
}

TEST(ResolveGamma, StandardizedDataGivesOneOverDim) {
  // Per-dimension population variance 1 in every dim -> gamma = 1/d.
  const std::vector<std::vector<double>> rows = {{-1.0, 1.0, -1.0}, {1.0, -1.0, 1.0}};
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(psrec::resolve_gamma(rows, cfg), 1.0 / 3.0);
}

TEST(ResolveGamma, ZeroSpreadFallsBackToInverseDim) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(psrec::resolve_gamma({{1.0, 2.0}, {1.0, 2.0}}, cfg), 0.5);
}

TEST(SolveDual, TwoPointAnalyticOptimum) {
  // Opposite-label points at unit distance, gamma = 1, generous C. The
  // symmetric stationary point has alpha1 = alpha2 = 1 / (1 - exp(-1)).
  const std::vector<std::vector<double>> x = {{0.0}, {1.0}};
  const std::vector<int> y = {1, -1};
  TrainConfig cfg;
  cfg.c = 10.0;
  cfg.gamma = 1.0;
  cfg.tol = 1e-6;
  cfg.max_passes = 500;
  const SmoResult result = psrec::solve_dual(x, y, cfg);
  const double expected = 1.0 / (1.0 - std::exp(-1.0));
  EXPECT_NEAR(result.alpha[0], expected, 1e-5);
  EXPECT_NEAR(result.alpha[1], expected, 1e-5);
  // Independent 1-D scan over the equality-feasible line agrees.
  const double scan = oracle::dual_optimum_grid2(x, y, cfg.c, 1.0, 1e-4);
  EXPECT_NEAR(psrec::dual_objective(x, y, result.alpha, 1.0), scan, 1e-6);
}

TEST(SolveDual, MatchesEnumeratedOptimumOnSmallProblems) {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 12; ++round) {
    const int n = 4 + static_cast<int>(rng() % 3);
    Problem p = random_problem(rng, n, 2);
    TrainConfig cfg;
    cfg.c = (round % 2 == 0) ? 1.0 : 5.0;
    cfg.gamma = 0.8;
    cfg.tol = 1e-5;
    cfg.max_passes = 2000;
    cfg.seed = 100 + round;
    const SmoResult result = psrec::solve_dual(p.x, p.y, cfg);
    const double achieved = psrec::dual_objective(p.x, p.y, result.alpha, 0.8);
    const double best = oracle::dual_optimum_enumerated(p.x, p.y, cfg.c, 0.8);
    EXPECT_GE(achieved, best - 1e-4) << "round " << round;
    EXPECT_LE(achieved, best + 1e-6) << "round " << round;
  }
}

TEST(SolveDual, SatisfiesConstraintsAndKkt) {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 10; ++round) {
    Problem p = random_problem(rng, 12, 3);
    TrainConfig cfg;
    cfg.c = 2.0;
    cfg.tol = 1e-3;
    cfg.max_passes = 2000;
    cfg.seed = round;
    const SmoResult result = psrec::solve_dual(p.x, p.y, cfg);
    EXPECT_TRUE(oracle::inside_box(result.alpha, cfg.c));
    EXPECT_LE(oracle::equality_residual(p.y, result.alpha), 1e-8);
    EXPECT_LE(oracle::max_kkt_violation(p.x, p.y, result.alpha, result.bias, cfg.c, result.gamma),
              cfg.tol);
  }
}

TEST(SolveDual, DeterministicForFixedSeed) {
  std::mt19937_64 rng(31);
  Problem p = random_problem(rng, 20, 4);
  TrainConfig cfg;
  cfg.seed = 42;
  cfg.max_passes = 2000;
  const SmoResult a = psrec::solve_dual(p.x, p.y, cfg);
  const SmoResult b = psrec::solve_dual(p.x, p.y, cfg);
  ASSERT_EQ(a.alpha.size(), b.alpha.size());
  for (std::size_t i = 0; i < a.alpha.size(); ++i) EXPECT_EQ(a.alpha[i], b.alpha[i]);
  EXPECT_EQ(a.bias, b.bias);
  EXPECT_EQ(a.sweeps, b.sweeps);
}

TEST(SolveDual, DuplicatePointLeavesDecisionFunctionUnchanged) {
  // With a generous C the reference solution has no bound support vectors, so
  // the decision function is the unique optimum; duplicating one training
  // point may split its weight between copies but must not move the function.
  const std::vector<std::vector<double>> x = {{0.0, 0.0}, {2.0, 0.1}, {0.1, 2.0}, {2.2, 2.1}};
  const std::vector<int> y = {1, -1, -1, 1};
  TrainConfig cfg;
  cfg.c = 50.0;
  cfg.gamma = 0.5;
  cfg.tol = 1e-6;
  cfg.max_passes = 5000;
  const TrainedSvm base = psrec::train_svm(x, y, cfg);
  const SmoResult base_raw = psrec::solve_dual(x, y, cfg);
  for (double a : base_raw.alpha) ASSERT_LT(a, cfg.c - 1e-6) << "precondition: no bound SVs";

  auto x2 = x;
  auto y2 = y;
  x2.push_back(x[1]);
  y2.push_back(y[1]);
  const TrainedSvm dup = psrec::train_svm(x2, y2, cfg);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 3.0);
  for (int t = 0; t < 40; ++t) {
    const std::vector<double> q{u(rng), u(rng)};
    EXPECT_NEAR(base.decision_value(q), dup.decision_value(q), 1e-4);
  }
}

TEST(TrainSvm, SeparableProblemClassifiesTrainingSet) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) {
    x.push_back({-2.0 + noise(rng), -2.0 + noise(rng)});
    y.push_back(-1);
    x.push_back({2.0 + noise(rng), 2.0 + noise(rng)});
    y.push_back(1);
  }
  TrainConfig cfg;
  cfg.c = 5.0;
  cfg.max_passes = 2000;
  const TrainedSvm model = psrec::train_svm(x, y, cfg);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(model.predict(x[i]), y[i]);
  EXPECT_GT(model.support_vectors().size(), 0u);
  EXPECT_LE(model.support_vectors().size(), x.size());
}

TEST(TrainSvm, PredictBoundaryConventionIsPositive) {
  // Symmetric two-point problem: the midpoint has decision value exactly 0
  // (by symmetry) and must map to +1.
  const std::vector<std::vector<double>> x = {{-1.0}, {1.0}};
  const std::vector<int> y = {-1, 1};
  TrainConfig cfg;
  cfg.c = 10.0;
  cfg.gamma = 1.0;
  const TrainedSvm model = psrec::train_svm(x, y, cfg);
  const std::vector<double> mid{0.0};
  EXPECT_NEAR(model.decision_value(mid), 0.0, 1e-9);
  EXPECT_EQ(model.predict(mid), 1);
}

TEST(TrainSvm, SupportVectorsAreOnlyPositiveAlpha) {
  std::mt19937_64 rng(41);
  Problem p = random_problem(rng, 24, 3);
  TrainConfig cfg;
  cfg.c = 1.0;
  cfg.max_passes = 2000;
  const SmoResult raw = psrec::solve_dual(p.x, p.y, cfg);
  const TrainedSvm model = psrec::train_svm(p.x, p.y, cfg);
  std::size_t positive = 0;
  for (double a : raw.alpha)
    if (a > 0.0) ++positive;
  EXPECT_EQ(model.support_vectors().size(), positive);
  // Decision values agree between the packed model and the raw expansion.
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> q{u(rng), u(rng), u(rng)};
    double raw_value = raw.bias;
    for (std::size_t i = 0; i < p.x.size(); ++i)
      raw_value += raw.alpha[i] * p.y[i] * psrec::rbf_kernel(p.x[i], q, raw.gamma);
    EXPECT_NEAR(model.decision_value(q), raw_value, 1e-10);
  }
}

TEST(TrainSvm, ValidatesInput) {
  TrainConfig cfg;
  EXPECT_THROW(psrec::train_svm({{0.0}, {1.0}}, {1, 1}, cfg), TrainingError);
  EXPECT_THROW(psrec::train_svm({{0.0}, {1.0}}, {1, 2}, cfg), TrainingError);
  EXPECT_THROW(psrec::train_svm({{0.0}}, {1}, cfg), TrainingError);
  EXPECT_THROW(psrec::train_svm({{0.0}, {1.0, 2.0}}, {1, -1}, cfg), DimensionError);
  TrainConfig bad = cfg;
  bad.c = 0.0;
  EXPECT_THROW(psrec::train_svm({{0.0}, {1.0}}, {1, -1}, bad), DomainError);
  bad = cfg;
  bad.tol = 0.0;
  EXPECT_THROW(psrec::train_svm({{0.0}, {1.0}}, {1, -1}, bad), DomainError);
}

TEST(TrainSvm, ConvergenceFailureCarriesDiagnostics) {
  // An adversarial budget: one sweep cannot finish a 40-point noisy problem.
  std::mt19937_64 rng(53);
  Problem p = random_problem(rng, 40, 2);
  TrainConfig cfg;
  cfg.max_passes = 1;
  cfg.c = 1.0;
  try {
    psrec::solve_dual(p.x, p.y, cfg);
    SUCCEED() << "solver finished within one sweep; nothing to assert";
  } catch (const ConvergenceError& e) {
    EXPECT_GE(e.sweeps(), 1);
    EXPECT_GT(e.open_violations(), 0);
    EXPECT_NE(std::string(e.what()).find("sweep"), std::string::npos);
  }
}

TEST(DualObjective, HandComputedValues) {
  const std::vector<std::vector<double>> x = {{0.0}, {1.0}};
  const std::vector<int> y = {1, -1};
  EXPECT_DOUBLE_EQ(psrec::dual_objective(x, y, {0.0, 0.0}, 1.0), 0.0);
  // W(t, t) = 2t - t^2 (1 - k) with k = exp(-1).
  const double t = 0.5;
  const double expected = 2.0 * t - t * t * (1.0 - std::exp(-1.0));
  EXPECT_NEAR(psrec::dual_objective(x, y, {t, t}, 1.0), expected, 1e-12);
}

TEST(DualObjective, NeverExceedsEnumeratedOptimum) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> ua(0.0, 1.0);
  for (int round = 0; round < 8; ++round) {
    Problem p = random_problem(rng, 5, 2);
    const double best = oracle::dual_optimum_enumerated(p.x, p.y, 1.0, 1.0);
    // Random feasible points (projected onto the equality constraint by
    // pairing) must score at or below the enumerated maximum.
    for (int t = 0; t < 20; ++t) {
      std::vector<double> alpha(p.x.size(), 0.0);
      // Give equal mass m to one positive and one negative example.
      std::vector<int> pos, neg;
      for (std::size_t i = 0; i < p.y.size(); ++i) (p.y[i] > 0 ? pos : neg).push_back(static_cast<int>(i));
      const double m = ua(rng);
      alpha[pos[rng() % pos.size()]] = m;
      alpha[neg[rng() % neg.size()]] = m;
      EXPECT_LE(psrec::dual_objective(p.x, p.y, alpha, 1.0), best + 1e-9);
    }
  }
}

}  // namespace
