#pragma once

#include "tensoropt/errors.hpp"
#include "tensoropt/rng.hpp"
#include "tensoropt/types.hpp"

#include <memory>
#include <optional>

namespace tensoropt {

/* Static metadata about an objective.  Lipschitz constants are upper bounds
 * per derivative order (index i = order i, i = 0 meaning the function itself);
 * noise[i] bounds the deviation of a single stochastic component's order-i
 * derivative from the mean.  NaN marks an unknown constant. */
struct OracleMeta {
  int order_available = 1;
  std::array<double, 4> lipschitz{kNaN, kNaN, kNaN, kNaN};
  std::array<double, 4> noise{kNaN, kNaN, kNaN, kNaN};
};

/* Evaluation counters.  One instance belongs to one solver run; aggregation
 * across runs is the caller's job.  n_component counts per-component
 * evaluations of finite-sum objectives (full or sampled). */
struct CallCounters {
  long long n_value = 0;
  long long n_grad = 0;
  long long n_hess = 0;
  long long n_d3 = 0;
  long long n_component = 0;

  friend bool operator==(const CallCounters&, const CallCounters&) = default;

  CallCounters& operator+=(const CallCounters& o) {
    n_value += o.n_value;
    n_grad += o.n_grad;
    n_hess += o.n_hess;
    n_d3 += o.n_d3;
    n_component += o.n_component;
    return *this;
  }

  /* Componentwise <=, used to assert monotone growth along a trace. */
  bool dominated_by(const CallCounters& o) const {
    return n_value <= o.n_value && n_grad <= o.n_grad && n_hess <= o.n_hess &&
           n_d3 <= o.n_d3 && n_component <= o.n_component;
  }
};

/* Abstract differentiable objective.  Orders above order_available() throw
 * CapabilityError.  Third derivatives are exposed only through their action
 * on a repeated direction, d3_apply(x, h) = D3 f(x)[h, h, .], which is all
 * the solvers ever need and keeps memory at O(d) per call. */
class Objective {
 public:
  virtual ~Objective() = default;

  virtual int dimension() const = 0;
  virtual int order_available() const = 0;
  virtual OracleMeta meta() const {
    OracleMeta m;
    m.order_available = order_available();
    return m;
  }

  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Matrix hessian(const Vector& x) const {
    (void)x;
    throw CapabilityError("objective does not provide second derivatives");
  }
  virtual Vector d3_apply(const Vector& x, const Vector& h) const {
    (void)x;
    (void)h;
    throw CapabilityError("objective does not provide third derivatives");
  }

  /* Number of components charged to n_component when a full derivative of
   * this objective is evaluated.  1 for plain objectives; finite sums
   * override with their component count. */
  virtual long long component_cost() const { return 1; }
};

/* Point evaluation of an objective through a given derivative order.
 * d3_action is a deferred callable: building the bundle performs no tensor
 * work, each later call d3_action(h) costs one third-derivative action (and
 * is counted as such by the owning CountingOracle). */
struct DerivativeBundle {
  Vector point;
  int order = 1;
  double value = kNaN;
  Vector gradient;
  std::optional<Matrix> hessian;
  D3Action d3_action;  // empty unless order >= 3
  Provenance provenance = Provenance::exact;
};

/* Counting decorator.  Wraps a borrowed Objective and increments counters
 * once per derivative order evaluated; d3 actions are counted per call of
 * the returned closure, since that is where the work happens. */
class CountingOracle {
 public:
  explicit CountingOracle(const Objective& obj) : obj_(&obj) {}

  const Objective& objective() const { return *obj_; }
  int dimension() const { return obj_->dimension(); }
  int order_available() const { return obj_->order_available(); }
  OracleMeta meta() const { return obj_->meta(); }
  const CallCounters& counters() const { return counters_; }

  double value(const Vector& x) {
    ++counters_.n_value;
    counters_.n_component += obj_->component_cost();
    return obj_->value(x);
  }
  Vector gradient(const Vector& x) {
    ++counters_.n_grad;
    counters_.n_component += obj_->component_cost();
    return obj_->gradient(x);
  }
  Matrix hessian(const Vector& x) {
    ++counters_.n_hess;
    counters_.n_component += obj_->component_cost();
    return obj_->hessian(x);
  }
  Vector d3_apply(const Vector& x, const Vector& h) {
    ++counters_.n_d3;
    counters_.n_component += obj_->component_cost();
    return obj_->d3_apply(x, h);
  }

  /* Charges work performed outside the wrapper on the same objective
   * (the mini-batch sampler evaluates components directly). */
  void charge(const CallCounters& extra) { counters_ += extra; }

 private:
  const Objective* obj_;
  CallCounters counters_;
};

/* Default finite-difference step for the third-derivative stencil, the
 * cube-root rule scaled by the point and direction sizes:
 * tau = eps_machine^(1/3) * max(1, ||x||) / max(1, ||h||). */
double default_fd_tau(const Vector& x, const Vector& h);

/* Directional third derivative from three gradient evaluations:
 *   (grad f(x + tau h) - 2 grad f(x) + grad f(x - tau h)) / tau^2
 * which approximates D3 f(x)[h, h, .].  Exact (up to round-off) for
 * quartics.  tau <= 0 selects default_fd_tau.  grad_center, when given,
 * saves the center gradient evaluation.  h = 0 returns the zero vector
 * without touching the oracle. */
Vector fd_third_directional(CountingOracle& oracle, const Vector& x,
                            const Vector& h, double tau = 0.0,
                            const Vector* grad_center = nullptr);

/* Evaluates value and derivatives of `oracle` at x through `order`
 * (1 <= order <= 3).  Throws CapabilityError when the oracle cannot supply
 * the requested order and DomainError on dimension mismatch.  The d3_action
 * closure of an order-3 bundle charges the oracle's counters on every call,
 * so the bundle borrows the oracle and must not outlive it.
 *
 * With fd_third = true the third derivative action is replaced by
 * fd_third_directional stencils around a cached center gradient (two extra
 * gradient evaluations per action); the bundle is then marked
 * Provenance::finite_difference.  This works for oracles that only provide
 * second derivatives. */
DerivativeBundle eval_bundle(CountingOracle& oracle, const Vector& x,
                             int order, bool fd_third = false,
                             double fd_tau = 0.0);

/* Largest directional deviation between two derivative sources at the same
 * point:  max over `trials` random unit directions h of
 *   order 1:  ||g_approx - g_exact||            (direction independent)
 *   order 2:  ||(H_approx - H_exact) h||
 *   order 3:  ||(T_approx - T_exact)[h, h, .]||
 * This is an empirical lower estimate of the uniform error bound delta_i
 * used by the inexact model family.  Both bundles must sit at the same
 * point and carry the requested order. */
double audit_inexactness(const DerivativeBundle& approx,
                         const DerivativeBundle& exact, int order, int trials,
                         Rng& rng);

/* Central-difference reference derivatives used by consistency checks. */
Vector fd_gradient(CountingOracle& oracle, const Vector& x, double step = 0.0);
Vector fd_hessian_apply(CountingOracle& oracle, const Vector& x,
                        const Vector& h, double step = 0.0);

}  // namespace tensoropt
