#include "tensoropt/distsim.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace tensoropt {
namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double spectral_norm_ref(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  return std::max(std::abs(es.eigenvalues().minCoeff()),
                  std::abs(es.eigenvalues().maxCoeff()));
}

TEST(Workers, ShapesAndPooling) {
  DistConfig cfg;
  cfg.workers = 3;
  cfg.samples = 20;
  cfg.d = 4;
  cfg.mu_f = 0.1;
  cfg.seed = 1;
  WorkerSet set = make_workers(cfg);
  ASSERT_EQ(set.local.size(), 3u);
  EXPECT_EQ(set.d, 4);
  EXPECT_EQ(set.pooled->components(), 60);
  for (const auto& w : set.local) EXPECT_EQ(w->components(), 20);

  // The pooled objective is the average of the three local averages.
  Vector x = Vector::Constant(4, 0.3);
  double acc = 0.0;
  for (const auto& w : set.local) acc += w->value(x);
  EXPECT_NEAR(set.pooled->value(x), acc / 3.0,
              1e-12 * std::max(1.0, std::abs(acc)));
}

TEST(Similarity, SingleWorkerIsExactlyZero) {
  DistConfig cfg;
  cfg.workers = 1;
  cfg.samples = 25;
  cfg.d = 3;
  cfg.mu_f = 0.2;
  cfg.seed = 4;
  WorkerSet set = make_workers(cfg);
  Rng rng = make_rng(9);
  EXPECT_EQ(estimate_similarity(set, 8, rng), 0.0);
}

TEST(Similarity, IdenticalDataIsNumericallyZero) {
  DistConfig cfg;
  cfg.workers = 3;
  cfg.samples = 30;
  cfg.d = 4;
  cfg.mu_f = 0.1;
  cfg.identical_data = true;
  cfg.seed = 2;
  WorkerSet set = make_workers(cfg);
  Rng rng = make_rng(11);
  EXPECT_LE(estimate_similarity(set, 8, rng), 1e-12);
}

TEST(Similarity, MatchesHandComputedSpectralNorm) {
  DistConfig cfg;
  cfg.workers = 2;
  cfg.samples = 3;
  cfg.d = 2;
  cfg.mu_f = 0.1;
  cfg.seed = 21;
  WorkerSet set = make_workers(cfg);

  // One probe draw, mirrored: the estimator draws from the ball of radius 2.
  Rng mirror = make_rng(5);
  const Vector x = ball_vector(mirror, 2, 2.0);
  const double by_hand = spectral_norm_ref(set.pooled->hessian(x) -
                                           set.local[0]->hessian(x));
  Rng rng = make_rng(5);
  EXPECT_DOUBLE_EQ(estimate_similarity(set, 1, rng), by_hand);
  EXPECT_GT(by_hand, 0.0);
}

TEST(Similarity, HalvingTheSampleSizeGrowsTheBound) {
  std::vector<double> ratios;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    DistConfig small;
    small.workers = 4;
    small.samples = 100;
    small.d = 5;
    small.mu_f = 0.1;
    small.seed = seed;
    DistConfig big = small;
    big.samples = 200;
    WorkerSet ws_small = make_workers(small);
    WorkerSet ws_big = make_workers(big);
    Rng r1 = make_rng(seed, 7), r2 = make_rng(seed, 7);
    const double s_small = estimate_similarity(ws_small, 16, r1);
    const double s_big = estimate_similarity(ws_big, 16, r2);
    ratios.push_back(s_small / s_big);
  }
  const double med = median(ratios);
  EXPECT_GE(med, 1.05);  // statistical similarity decays roughly as 1/sqrt(n)
  EXPECT_LE(med, 2.2);
}

TEST(Similarity, Validation) {
  DistConfig cfg;
  cfg.workers = 2;
  cfg.samples = 5;
  cfg.d = 2;
  cfg.mu_f = 0.1;
  WorkerSet set = make_workers(cfg);
  Rng rng = make_rng(1);
  EXPECT_THROW(estimate_similarity(set, 0, rng), DomainError);
  WorkerSet empty;
  EXPECT_THROW(estimate_similarity(empty, 4, rng), DomainError);
}

TEST(Run, RelativeConditioningFieldsAndExplicitSigma) {
  DistConfig cfg;
  cfg.workers = 3;
  cfg.samples = 40;
  cfg.d = 4;
  cfg.mu_f = 0.1;
  cfg.sigma = 0.3;
  cfg.rounds_max = 3;
  cfg.eps = 1e-14;
  cfg.seed = 5;
  WorkerSet set = make_workers(cfg);
  DistTrace t = run_distributed(cfg, set, Vector::Zero(4));
  EXPECT_DOUBLE_EQ(t.sigma_used, 0.3);
  EXPECT_DOUBLE_EQ(t.kappa_rho, 1.0 + 2.0 * 0.3 / 0.1);
  EXPECT_DOUBLE_EQ(t.mu_rho, 0.1 / (0.1 + 2.0 * 0.3));
  EXPECT_FALSE(t.converged);  // eps far below reach of 3 rounds
  ASSERT_EQ(t.rows.size(), 3u);
}

TEST(Run, AutoSigmaMirrorsTheProbePad) {
  DistConfig cfg;
  cfg.workers = 3;
  cfg.samples = 30;
  cfg.d = 4;
  cfg.mu_f = 0.1;
  cfg.rounds_max = 1;
  cfg.eps = 1e-12;
  cfg.seed = 8;
  ASSERT_TRUE(cfg.sigma_is_auto());
  WorkerSet set = make_workers(cfg);
  Rng probe = make_rng(cfg.seed, 2);
  const double expect = 1.5 * estimate_similarity(set, 16, probe);
  DistTrace t = run_distributed(cfg, set, Vector::Zero(4));
  EXPECT_DOUBLE_EQ(t.sigma_used, expect);
}

TEST(Run, CommunicationIsExactlyTwoRoundsPerIteration) {
  DistConfig cfg;
  cfg.workers = 4;
  cfg.samples = 30;
  cfg.d = 4;
  cfg.mu_f = 0.1;
  cfg.rounds_max = 5;
  cfg.eps = 1e-14;
  cfg.seed = 3;
  WorkerSet set = make_workers(cfg);
  DistTrace t = run_distributed(cfg, set, Vector::Zero(4));
  ASSERT_EQ(t.rows.size(), 5u);
  for (const DistTraceRow& row : t.rows) {
    EXPECT_EQ(row.comm_rounds, 2 * row.round);
    EXPECT_GE(row.inner_iters, 0);
  }
}

TEST(Run, IdenticalDataConvergesInOneRound) {
  DistConfig cfg;
  cfg.workers = 3;
  cfg.samples = 40;
  cfg.d = 4;
  cfg.mu_f = 0.2;
  cfg.sigma = 0.0;  // exact similarity under identical data
  cfg.identical_data = true;
  cfg.rounds_max = 10;
  cfg.eps = 1e-6;
  cfg.seed = 6;
  cfg.inner.eps_grad = 1e-9;
  WorkerSet set = make_workers(cfg);
  DistTrace t = run_distributed(cfg, set, Vector::Zero(4));
  EXPECT_TRUE(t.converged);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].comm_rounds, 2);
  EXPECT_LE(t.rows[0].grad_norm, 1e-6);
  EXPECT_DOUBLE_EQ(t.mu_rho, 1.0);
  EXPECT_DOUBLE_EQ(t.kappa_rho, 1.0);
}

TEST(Run, RelativeSmoothnessHoldsUnderThePaddedSigma) {
  DistConfig cfg;
  cfg.workers = 4;
  cfg.samples = 60;
  cfg.d = 4;
  cfg.mu_f = 0.1;
  cfg.seed = 12;
  WorkerSet set = make_workers(cfg);
  Rng probe = make_rng(99);
  const double sigma = 1.2 * estimate_similarity(set, 64, probe);
  const double mu_rho = cfg.mu_f / (cfg.mu_f + 2.0 * sigma);

  Rng rng = make_rng(100);
  for (int t = 0; t < 30; ++t) {
    const Vector x = ball_vector(rng, 4, 2.0);
    const Vector h = unit_vector(rng, 4);
    const Matrix Hf = set.pooled->hessian(x);
    const Matrix Hr = set.local[0]->hessian(x);
    const double num = h.dot(Hf * h);
    const double den = h.dot(Hr * h) + sigma;
    EXPECT_GE(num / den, mu_rho - 1e-6);
    EXPECT_LE(num / den, 1.0 + 1e-6);
  }
}

TEST(Run, ConvergesLinearlyOnTheDefaultRegime) {
  DistConfig cfg;
  cfg.workers = 3;
  cfg.samples = 50;
  cfg.d = 4;
  cfg.mu_f = 0.1;
  cfg.rounds_max = 60;
  cfg.eps = 1e-8;
  cfg.seed = 15;
  WorkerSet set = make_workers(cfg);
  DistTrace t = run_distributed(cfg, set, Vector::Zero(4));
  EXPECT_TRUE(t.converged);
  ASSERT_GE(t.rows.size(), 2u);
  EXPECT_LT(t.rows.back().grad_norm, t.rows.front().grad_norm);
  EXPECT_LE(t.rows.back().grad_norm, 1e-8);
  // The gap diagnostic is measured against the pooled reference.
  EXPECT_LE(std::abs(t.rows.back().f_gap), 1e-10);
}

TEST(Run, ThirdOrderInnerSolverWorks) {
  DistConfig cfg;
  cfg.workers = 3;
  cfg.samples = 30;
  cfg.d = 3;
  cfg.mu_f = 0.1;
  cfg.rounds_max = 30;
  cfg.eps = 1e-7;
  cfg.seed = 18;
  cfg.inner.p = 3;
  cfg.inner.max_outer = 40;
  WorkerSet set = make_workers(cfg);
  DistTrace t = run_distributed(cfg, set, Vector::Zero(3));
  EXPECT_TRUE(t.converged);
  EXPECT_LE(t.rows.back().grad_norm, 1e-7);
}

TEST(Csv, HeaderAndZeroedClock) {
  DistConfig cfg;
  cfg.workers = 2;
  cfg.samples = 10;
  cfg.d = 3;
  cfg.mu_f = 0.1;
  cfg.rounds_max = 2;
  cfg.eps = 1e-14;
  cfg.seed = 2;
  WorkerSet set = make_workers(cfg);
  DistTrace t = run_distributed(cfg, set, Vector::Zero(3));
  EXPECT_EQ(DistTrace::csv_header(),
            std::string("round,f_gap,grad_norm,comm_rounds,inner_iters,"
                        "elapsed_s"));
  const std::string csv = t.to_csv();
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, DistTrace::csv_header());
  int rows = 0;
  while (std::getline(ss, line)) {
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "0");
    ++rows;
  }
  EXPECT_EQ(rows, 2);
}

TEST(Config, Validation) {
  DistConfig cfg;
  cfg.workers = 2;
  cfg.samples = 10;
  cfg.d = 3;
  cfg.mu_f = 0.1;
  WorkerSet set = make_workers(cfg);

  DistConfig bad = cfg;
  bad.workers = 0;
  EXPECT_THROW(make_workers(bad), DomainError);
  bad = cfg;
  bad.samples = 0;
  EXPECT_THROW(make_workers(bad), DomainError);
  bad = cfg;
  bad.mu_f = 0.0;
  EXPECT_THROW(make_workers(bad), DomainError);
  bad = cfg;
  bad.eps = 0.0;
  EXPECT_THROW(run_distributed(bad, set, Vector::Zero(3)), DomainError);
  bad = cfg;
  bad.workers = 3;  // does not match the built set
  EXPECT_THROW(run_distributed(bad, set, Vector::Zero(3)), DomainError);
  EXPECT_THROW(run_distributed(cfg, set, Vector::Zero(4)), DomainError);
}

}  // namespace
}  // namespace tensoropt
