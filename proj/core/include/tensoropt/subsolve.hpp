#pragma once

#include "tensoropt/model.hpp"

#include <numbers>

namespace tensoropt {

enum class SubsolveStatus { converged_relative, converged_absolute, max_iter };

/* Outcome of minimizing a regularized model.  step is in s coordinates
 * (candidate point = center + step).  model_grad_norm is the norm of the
 * model gradient at step (minimal subgradient norm when the model has a
 * delta_1 kink and step = 0).  objective_grad_norm is ||grad F|| at the
 * candidate when a full-objective gradient callback was supplied, NaN
 * otherwise. */
struct SubsolveResult {
  Vector step;
  double model_grad_norm = kNaN;
  double objective_grad_norm = kNaN;
  int inner_iterations = 0;
  SubsolveStatus status = SubsolveStatus::converged_absolute;
};

/* Relative-smoothness constants of the order-3 Bregman inner loop: the
 * model Hessian, measured against the reference 1/2 s'A s + (H/24)||s||^4,
 * stays within [mu_rho, l_rho], so the loop contracts at a fixed condition
 * number independent of the problem. */
struct BdgmConstants {
  static constexpr double l_rho = 1.0 + 1.0 / std::numbers::sqrt2;
  static constexpr double mu_rho = 1.0 - 1.0 / std::numbers::sqrt2;
  static constexpr double condition = l_rho / mu_rho;
};

/* Reusable eigendecomposition A = U diag(lam) U', computed once per
 * subproblem and shared by every 1-D solve inside it. */
struct EigenFactor {
  Matrix U;
  Vector lam;  // ascending

  static EigenFactor decompose(const Matrix& A);
  static EigenFactor zero(int dim);  // A = 0
};

struct RadialResult {
  Vector s;
  double r = 0.0;
  double mismatch = 0.0;  // | ||s|| - r | at return
  int evaluations = 0;
  bool converged = false;
};

/* Solves the fixed-point system
 *     (A + coeff(r) I) s = -c,   r = ||s||
 * that all stationarity conditions of the regularized models reduce to.
 * Strategy: with the eigendecomposition in hand, n(r) = ||s(r)|| costs O(d)
 * per trial r; the root of n(r) - r is bracketed geometrically, narrowed by
 * bisection and polished by Newton steps.  coeff may diverge at r -> 0
 * (norm kink); it must make A + coeff(r) I positive definite somewhere and
 * grow unboundedly.  Termination: | n(r) - r | <= tol * max(1, r).
 *
 * Throws ModelConvexityError when A's negative curvature exceeds what
 * coeff can compensate (H too small), NumericalError when no bracket or
 * root can be located. */
RadialResult radial_root_solve(const EigenFactor& factor, const Vector& c,
                               const std::function<double(double)>& coeff,
                               double tol = 1e-12, int max_iter = 256);

struct SubsolveOptions {
  double tol_abs = 1e-10;  // absolute model-gradient cutoff
  int max_iter = 200;      // Bregman iteration budget (order 3)
  int check_every = 5;     // cadence of the relative stopping test
  double radial_tol = 1e-13;
};

/* Full-objective gradient at a candidate point, used by the relative
 * stopping rule || grad model (s) || <= || grad F(center+s) || / (4p(p+1)). */
using GradCallback = std::function<Vector(const Vector&)>;

/* Order 1: closed-form prox step (H I + A) s = -g0 (A present only via a
 * folded quadratic composite).  Exact up to linear algebra. */
SubsolveResult solve_p1(const ModelState& state,
                        const GradCallback& grad_f = nullptr);

/* Order 2: one eigendecomposition plus a 1-D radial solve with
 * coeff(r) = (H/2) r (exact family; the error-aware family adds delta_1/r
 * and shifts A by delta_2). */
SubsolveResult solve_p2(const ModelState& state, const SubsolveOptions& opts = {},
                        const GradCallback& grad_f = nullptr);

/* Order 3: Bregman gradient steps relative to 1/2 s'A s + Q4 ||s||^4 where
 * Q4 is the model's own quartic coefficient (H/24 for the exact family; the
 * default H = 6 L3 makes that L3/4).  Each iteration costs one tensor
 * action and one radial solve with coeff(r) = delta_1/(l_rho r) + 4 Q4 r^2,
 * on the eigendecomposition computed once.  Convexity of the model needs
 * H >= 3 L3; too small an H surfaces as ModelConvexityError. */
SubsolveResult solve_p3_bdgm(const ModelState& state,
                             const SubsolveOptions& opts = {},
                             const GradCallback& grad_f = nullptr);

/* Dispatch on state.p. */
SubsolveResult solve_model(const ModelState& state,
                           const SubsolveOptions& opts = {},
                           const GradCallback& grad_f = nullptr);

}  // namespace tensoropt
