#pragma once

#include "tensoropt/model.hpp"
#include "tensoropt/oracle.hpp"
#include "tensoropt/stochastic.hpp"

#include <memory>
#include <optional>
#include <string>

namespace tensoropt {

/* Built-in analytic test objectives with exact derivatives through order 3. */
enum class Family {
  worst_case_fp,       // sum |u_i|^(p+1), u the forward-difference chain
  logistic,            // averaged logistic loss, bounded features, +-1 labels
  log_sum_exp,         // log sum exp(a_k.x + b_k)
  quadratic,           // 1/2 x.Qx - b.x with spectrum [1, cond]
  quartic_quadratic};  // 1/2 x.Qx + beta/4 ||x||^4

std::string to_string(Family family);
Family parse_family(const std::string& name);

/* Declarative description of a problem instance.  Constants left at NaN are
 * filled in by make_problem where the family can derive them; a reference
 * minimizer is attached for families with closed forms.  Serialized as
 * line-oriented `key = value` text (see parse_problem_spec). */
struct ProblemSpec {
  Family family = Family::quadratic;
  int d = 2;                     // dimension
  int p_target = 2;              // derivative order the instance is tuned for
  std::uint64_t data_seed = 0;   // synthetic-data generator seed
  long long samples = 100;       // data terms (logistic, log_sum_exp)
  double ridge = 0.0;            // l2 weight added per component (logistic)
  double cond = 10.0;            // top of the spectrum (quadratic families)
  double beta = 1.0;             // quartic coefficient (quartic_quadratic)

  std::array<double, 4> lipschitz{kNaN, kNaN, kNaN, kNaN};  // L_0..L_3
  double sigma_r = kNaN;         // r-growth modulus: F - F* >= sigma_r r^growth
  int growth_r = 2;
  double mu = kNaN;              // strong-convexity modulus

  std::optional<Vector> x_star;  // certified minimizer, if known
  std::optional<double> f_star;
  double ref_tol = kNaN;         // certificate tolerance for (x_star, f_star)
};

/* Text format: one `key = value` pair per line; `#` starts a comment; blank
 * lines ignored.  Keys: family, d, p_target, data_seed, samples, ridge,
 * cond, beta, L0..L3, sigma_r, growth_r, mu, x_star (comma-separated),
 * f_star, ref_tol.  Unknown keys raise DomainError naming the key; floats
 * round-trip exactly (17 significant digits). */
ProblemSpec parse_problem_spec(const std::string& text);
ProblemSpec load_problem_spec(const std::string& path);
std::string serialize_problem_spec(const ProblemSpec& spec);

/* A constructed objective together with the input spec completed with the
 * derived constants and any closed-form reference. */
struct BuiltProblem {
  std::unique_ptr<Objective> objective;
  ProblemSpec spec;
};

/* Averaged logistic loss over explicit data rows (labels +-1), each
 * component carrying ridge/2 ||x||^2 so strong convexity survives
 * sampling.  Backs the sampling driver and the distributed simulator when
 * the data is built externally; make_problem uses the same class with
 * synthetic data. */
std::unique_ptr<FiniteSumObjective> make_logistic_objective(Matrix features,
                                                            Vector labels,
                                                            double ridge);

/* Instantiates the family described by `spec` with exact derivatives
 * through order 3.  Derived constants are conservative upper bounds where
 * the tight global value is impractical (the difference-chain families
 * store (p+1)! ||B||^p; validated empirically by the derivative suite) and
 * exact where available (quartic_quadratic: L3 = 6 beta; quadratic:
 * L1 = lambda_max, L2 = L3 = 0).  Unsupported (family, p_target)
 * combinations raise CapabilityError, invalid sizes DomainError. */
BuiltProblem make_problem(const ProblemSpec& spec);

/* Conventional start point: ones(d)/sqrt(d) for the families whose
 * minimizer is the origin (unit start radius), zeros elsewhere. */
Vector default_start(const ProblemSpec& spec);

struct Reference {
  Vector x_star;
  double f_star = kNaN;
  double grad_norm = kNaN;  // || grad F(x_star) ||, the certificate
  double tol = kNaN;
};

/* Certified minimizer: the closed form where the family has one, otherwise
 * two independent long runs of the library's own solvers (the accelerated
 * method, restarted when a growth modulus is known, cross-checked by the
 * basic method) to || grad F || <= tol * 1e-3.  Disagreement beyond tol in
 * value raises CertificationError. */
Reference reference_solution(const ProblemSpec& spec, double tol);

struct GridResult {
  Vector s;
  double value = kNaN;
};

/* Independent grid oracle for subproblem verification: exhaustive
 * evaluation of model_value over [-w, w]^d on an odd grid (so the origin is
 * a grid point), followed by one refinement pass around the incumbent at
 * one tenth of the spacing.  d <= 3 only (CapabilityError); even grids
 * raise DomainError. */
GridResult brute_force_min_model(const ModelState& state, double box_halfwidth,
                                 int grid_points_per_axis);

}  // namespace tensoropt
