#pragma once

#include "tensoropt/subsolve.hpp"
#include "tensoropt/trace.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace tensoropt {

/* Shared configuration of the outer solvers. */
struct SolverConfig {
  int p = 2;                 // model order, in {1, 2, 3}
  double H = 0.0;            // regularization weight, must be > 0
  long long max_outer = 100;
  double eps_grad = 1e-8;    // stop on || grad F || <= eps_grad
  std::optional<double> eps_gap;  // stop on f - f_star <= eps_gap
  std::optional<double> f_star;   // reference value (enables f_gap, eps_gap)
  int lambda_max_trials = 64;     // step-size search budget per iteration
  bool superfast = false;    // tensor actions from gradient differences
  double fd_tau = 0.0;       // finite-difference step, 0 = default rule
  std::uint64_t seed = 0;    // reserved for stochastic variants
  SubsolveOptions subsolve;
  /* When an accepted iterate reveals f > model (the Lipschitz constant was
   * underestimated), double H and retry the iteration.  Applies to exact
   * derivative bundles only; sampled or differenced bundles violate the
   * bound by noise, not by a wrong H. */
  bool safeguard_doubling = true;
  int safeguard_max_doublings = 12;
};

/* Accumulators of the accelerated method.  weight a_{k+1} and weight_sum
 * A_k satisfy a^2 = lambda * (A_k + a) for every accepted step. */
struct MsnState {
  long long k = 0;
  double weight_sum = 0.0;
  Vector x;  // momentum point
  Vector y;  // iterate
  double lambda_prev = 1.0;
};

struct RunHooks {
  std::function<void(long long k, const Vector& y)> on_iterate;
};

/* One accepted outer step of the accelerated method. */
struct LambdaSearchResult {
  double lambda = 0.0;
  double weight = 0.0;       // a_{k+1}
  double phi = 0.0;          // lambda H ||step||^(p-1) / p!
  Vector x_tilde;
  Vector y;                  // x_tilde + step
  std::shared_ptr<const ModelState> model;  // accepted model (null if stationary)
  SubsolveResult sub;
  int solves = 0;            // subproblem solves spent
  long long inner_total = 0; // inner iterations across those solves
  bool stationary = false;   // x_tilde itself satisfies the gradient stop
  std::vector<int> inner_each;
};

/* Finds a step-size lambda whose subproblem solution lands in the window
 *   1/2 <= lambda H ||y - x_tilde||^(p-1) / p! <= p/(p+1),
 * where x_tilde couples the momentum and iterate points through the weight
 * a(lambda).  p = 1 admits the closed form lambda = 1/(2H).  Otherwise the
 * warm-started lambda is expanded geometrically (factor 2) in the violated
 * direction until the window is bracketed, then narrowed by geometric
 * bisection; the first lambda inside the window is accepted.  Throws
 * BracketFailure with the trial history after cfg.lambda_max_trials
 * subproblem solves. */
LambdaSearchResult lambda_bracket_search(CountingOracle& oracle,
                                         const QuadraticComposite* composite,
                                         const SolverConfig& cfg, double H,
                                         const MsnState& st);

/* Accelerated run.  Emits one trace row per iteration (row 0 is the start
 * point) with f, || grad F ||, the accepted lambda, the step norm and
 * cumulative counters.  Terminates on eps_grad, on eps_gap (when a
 * reference is configured) or after max_outer iterations. */
Trace msn_run(const Objective& f, const Vector& x0, const SolverConfig& cfg,
              const QuadraticComposite* composite = nullptr,
              const RunHooks* hooks = nullptr);

/* Constant c_p of the worst-case gap bound c_p H R^(p+1) / k^((3p+1)/2). */
double accel_rate_constant(int p);

/* Slowdown factor of the bound when subproblems are solved only to the
 * relative inner tolerance. */
constexpr double inexact_subsolve_factor = 12.0 / 5.0;

/* Iteration schedule for restarts under r-growth
 * (F(x) - F* >= sigma_r ||x - x*||^r):
 *   N_k = max(ceil((r c_p H 2^r R_k^(p+1-r) / sigma_r)^(2/(3p+1))), 1),
 * with R_k = R0 2^-k, k = 0..K-1. */
std::vector<long long> restart_schedule(int p, int r, double sigma_r, double H,
                                        double R0, int K);

/* Restarted accelerated run: K phases of N_k iterations each, every phase
 * warm-started at the previous result.  The trace is continuous (global
 * iteration numbers, shared counters); phase boundaries are recorded in
 * trace.phase_ends.  Termination tests stay active inside phases. */
Trace restarted_run(const Objective& f, const Vector& x0,
                    const SolverConfig& cfg, int r, double sigma_r, double R0,
                    int K, const QuadraticComposite* composite = nullptr,
                    const RunHooks* hooks = nullptr);

/* Unaccelerated run: x_{t+1} = argmin of the regularized model at x_t.
 * Monotone whenever the model upper-bounds f.  Rows where f increased
 * beyond round-off are flagged in trace.monotonicity_violations. */
Trace basic_tensor_run(const Objective& f, const Vector& x0,
                       const SolverConfig& cfg,
                       const std::array<double, 4>& deltas = {0, 0, 0, 0},
                       const QuadraticComposite* composite = nullptr,
                       const RunHooks* hooks = nullptr);

}  // namespace tensoropt
