#pragma once

#include "tensoropt/driver.hpp"
#include "tensoropt/stochastic.hpp"

#include <memory>
#include <string>
#include <vector>

namespace tensoropt {

/* Single-process simulation of distributed empirical risk minimization
 * under statistical similarity: `workers` nodes each hold `samples` local
 * data points; worker 0 is the master and contributes the reference
 * function rho(x) = f_1(x) + sigma/2 ||x||^2.  The master runs a
 * Bregman-distance gradient loop whose subproblems it solves locally with
 * this library's own tensor solver, and every outer iteration costs
 * exactly two communication rounds (gather gradients, broadcast iterate). */
struct DistConfig {
  int workers = 4;
  long long samples = 200;       // local data points per worker
  int d = 5;
  double mu_f = 0.1;             // per-sample ridge => global strong convexity
  double sigma = -1.0;           // similarity bound; < 0 selects auto
  bool identical_data = false;   // every worker holds the master's data
  SolverConfig inner;            // master's local solver (H <= 0 = derive)
  long long rounds_max = 100;
  double eps = 1e-8;             // stop on || grad f || <= eps
  std::uint64_t seed = 0;

  bool sigma_is_auto() const { return sigma < 0.0; }
};

struct WorkerSet {
  std::vector<std::unique_ptr<FiniteSumObjective>> local;  // [0] is the master
  std::unique_ptr<FiniteSumObjective> pooled;   // the global objective f
  int d = 0;
  double mu_f = 0.0;
};

/* Synthetic logistic data, one i.i.d. block per worker with a shared
 * planted labeling direction; identical_data copies the master's block to
 * every worker (the sigma = 0 regime).  Deterministic per seed. */
WorkerSet make_workers(const DistConfig& cfg);

/* Empirical similarity bound: the largest spectral norm of
 * hessian(f) - hessian(f_1) over `x_samples` random probe points (ball of
 * radius 2 around the origin).  Deterministic per rng state. */
double estimate_similarity(const WorkerSet& workers, int x_samples, Rng& rng);

struct DistTraceRow {
  long long round = 0;
  double f_gap = kNaN;
  double grad_norm = kNaN;
  long long comm_rounds = 0;   // cumulative; always 2 * round
  long long inner_iters = 0;   // master tensor steps this round
  double elapsed_s = 0.0;
};

struct DistTrace {
  std::vector<DistTraceRow> rows;
  bool converged = false;
  double sigma_used = kNaN;    // after auto resolution
  double mu_rho = kNaN;        // mu_f / (mu_f + 2 sigma)
  double kappa_rho = kNaN;     // 1 + 2 sigma / mu_f
  double f_star = kNaN;        // pooled reference value (diagnostic)

  static std::string csv_header();
  /* elapsed_s column is written as 0 unless wall_clock, keeping equal-seed
   * reruns bitwise identical. */
  std::string to_csv(bool wall_clock = false) const;
};

void write_dist_csv_file(const DistTrace& trace, const std::string& path,
                         bool wall_clock = false);

/* The outer loop.  Per round: gather the global gradient at y_t (one comm
 * round); if its norm is within eps, stop without recording a row (the
 * terminal check); otherwise the master minimizes
 *   f_1(y) + sigma/2 ||y||^2 + <grad f(y_t) - grad f_1(y_t) - sigma y_t, y>
 * (the Bregman step with L_rho = 1) to the inner config's tolerance and
 * broadcasts the new iterate (second comm round).  f_gap diagnostics
 * compare against a high-accuracy pooled reference computed out-of-band
 * before the loop; neither the reference nor the diagnostics touch the
 * communication ledger.  Inner-solver failures are rethrown as
 * NumericalError tagged with the round index. */
DistTrace run_distributed(const DistConfig& cfg, const WorkerSet& workers,
                          const Vector& x0);

}  // namespace tensoropt
