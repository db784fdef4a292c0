#pragma once

#include "tensoropt/driver.hpp"
#include "tensoropt/oracle.hpp"
#include "tensoropt/rng.hpp"

#include <array>
#include <vector>

namespace tensoropt {

/* Objective of the form f(x) = (1/m) sum_j f_j(x), exposing the components
 * individually so derivatives can be estimated from mini-batches.
 *
 * Full derivatives (the Objective interface) are computed by averaging all
 * components in ascending index order through the same accumulation helpers
 * the sampler uses, so a full-batch sample reproduces them bitwise.  One
 * full evaluation charges m component evaluations via component_cost(). */
class FiniteSumObjective : public Objective {
 public:
  explicit FiniteSumObjective(long long components);

  long long components() const { return m_; }
  long long component_cost() const override { return m_; }
  const std::vector<long long>& all_indices() const { return all_; }

  virtual double component_value(long long j, const Vector& x) const = 0;
  virtual Vector component_gradient(long long j, const Vector& x) const = 0;
  virtual Matrix component_hessian(long long j, const Vector& x) const;
  virtual Vector component_d3_apply(long long j, const Vector& x,
                                    const Vector& h) const;

  /* Averages over an index multiset, accumulating in the order given.
   * The accumulation order is part of the reproducibility contract. */
  double average_value(const std::vector<long long>& idx,
                       const Vector& x) const;
  Vector average_gradient(const std::vector<long long>& idx,
                          const Vector& x) const;
  Matrix average_hessian(const std::vector<long long>& idx,
                         const Vector& x) const;
  Vector average_d3_apply(const std::vector<long long>& idx, const Vector& x,
                          const Vector& h) const;

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  Vector d3_apply(const Vector& x, const Vector& h) const override;

 private:
  long long m_ = 0;
  std::vector<long long> all_;
};

/* Mini-batch derivative estimate at x through `order`.  Each derivative
 * order i draws its own fresh index set S_i of size batch_sizes[i-1],
 * uniformly with replacement; a batch size >= m switches that order to the
 * full index set without consuming random draws, which reproduces the exact
 * derivative bitwise.  The function value is evaluated exactly (it shifts
 * the model by a constant and never affects the step).  The bundle is
 * marked Provenance::sampled; its d3_action averages the captured S_3 on
 * every call.
 *
 * Counters: the exact value charge goes through the wrapper; each sampled
 * derivative charges one call of its order plus |S_i| component
 * evaluations, so a full-batch sample matches the counter trail of the
 * exact evaluation.
 *
 * Errors: DomainError for a zero batch size or order outside 1..3,
 * CapabilityError when the wrapped objective is not a finite sum or does
 * not supply the requested order. */
DerivativeBundle sample_derivatives(CountingOracle& oracle, const Vector& x,
                                    int order,
                                    const std::array<long long, 3>& batch_sizes,
                                    Rng& rng);

enum class BatchSchedule { plain, accelerated };

/* Output of the batch-size planner.  `raw` keeps the pre-ceiling values and
 * `eps_exponent` the exact accuracy exponents (the power of eps/radius in
 * n_i), so scaling laws can be checked without re-deriving them. */
struct BatchPlan {
  int p = 0;
  bool accelerated_schedule = false;
  std::vector<long long> n;            // n_1..n_p, each >= 1
  std::vector<double> raw;             // values before ceil/clamp
  std::vector<double> eps_exponent;    // d log n_i / d log (eps/radius)
  std::vector<double> noise;           // M_1..M_p input echo
  std::vector<double> lipschitz;       // L_0..L_p input echo
  double H = 0.0;
  double eps = 0.0;
  double radius = 0.0;
  double confidence = 0.0;
};

/* Batch sizes that keep the sampled method's rate within a constant of the
 * exact one, with the hidden proportionality constant set to 1 (absolute
 * sizes are indicative; the scaling in eps, i and the constants is the
 * contract).  Plain schedule:
 *   n_i = ceil( (M_i + L_{i-1})^2 / (L_p + pH)^(2(i-1)/p)
 *               * (eps/radius)^(-2(p-i+1)/p) * ln(1/confidence) ),
 * with radius standing for the level-set diameter D.  Accelerated schedule:
 *   n_1 = ceil( (L_0 + M_1)^2 (eps/radius)^(-2) ln(1/confidence) ),
 *   n_i = ceil( (L_{i-1} + M_i)^2 / (L_p + pH)^(2i/(p+1))
 *               * (eps/radius)^(-2(p-i+1)/(p+1)) * ln(1/confidence) ),
 * with radius standing for the iterate bound (R or its outer estimate).
 * All results are clamped to >= 1.  M must supply M_1..M_p, L must supply
 * L_0..L_p; nonpositive H, eps, radius or confidence outside (0, 1] raise
 * DomainError. */
BatchPlan plan_batches(int p, BatchSchedule schedule,
                       const std::vector<double>& M,
                       const std::vector<double>& L, double H, double eps,
                       double radius, double confidence);

/* Mini-batch tensor method: the basic (non-accelerated) outer loop where
 * every iteration models f from sample_derivatives with the plan's batch
 * sizes and the given model slacks (deltas).  Trace rows record the exact
 * objective value and gradient norm at each iterate, so monotonicity
 * violations of the true objective are flagged, not hidden.  The model
 * safeguard never fires on sampled models; sampling noise is expressed only
 * through the deltas.  With full batches and zero deltas the run reduces
 * bitwise (rows and counters) to basic_tensor_run on the same objective.
 * The sampler's random stream derives from cfg.seed, so equal configs
 * replay identical runs. */
Trace stochastic_tensor_run(const FiniteSumObjective& f, const Vector& x0,
                            const SolverConfig& cfg, const BatchPlan& plan,
                            const std::array<double, 4>& deltas,
                            const RunHooks* hooks = nullptr);

}  // namespace tensoropt
