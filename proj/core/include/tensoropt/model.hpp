#pragma once

#include "tensoropt/oracle.hpp"

#include <optional>

namespace tensoropt {

/* Composite term g(y) = 1/2 y'Q y + b'y + c, the only composite family the
 * solvers support.  It is folded exactly into the polynomial model (Q into
 * the quadratic part, gradient at the center into the linear part), so the
 * subsolvers never see it as a separate object.  Q may be absent (pure
 * linear term), b may be empty (pure quadratic). */
struct QuadraticComposite {
  std::optional<Matrix> Q;
  Vector b;  // empty means zero
  double c = 0.0;

  double value(const Vector& y) const {
    double v = c;
    if (b.size() > 0) v += b.dot(y);
    if (Q) v += 0.5 * y.dot(*Q * y);
    return v;
  }
  Vector grad(const Vector& y) const {
    Vector g = Vector::Zero(y.size());
    if (b.size() > 0) g += b;
    if (Q) g += *Q * y;
    return g;
  }
};

/* Regularized polynomial model around a center point, in step coordinates
 * s = y - center.  Two families share this struct:
 *
 *  exact (all deltas zero):
 *    m(s) = f_c + g0's + 1/2 s'A s + 1/6 <t3(s), s>
 *           + H/(p+1)! * ||s||^(p+1)
 *
 *  error-aware (some delta_i > 0, derivatives carry uniform directional
 *  error bounds delta_i):
 *    m(s) = f_c + g0's + 1/2 s'A s + 1/6 <t3(s), s>
 *           + delta_1 ||s|| + delta_2/2 ||s||^2 + delta_3/3 ||s||^3
 *           + H/((p+1)(p-1)!) * ||s||^(p+1)
 *
 * with terms above order p absent.  The delta_1 coefficient is 1 (the
 * i(i-2)! pattern of the higher orders has no meaning at i = 1); the
 * stiffer regularizer of the error-aware family absorbs the error terms so
 * the model still upper-bounds f.  A quadratic composite, when present at
 * build time, is folded into f_c, g0 and A. */
struct ModelState {
  Vector center;
  int p = 2;
  double H = 0.0;
  double f_center = 0.0;
  Vector g0;
  std::optional<Matrix> A;  // absent for p = 1 without composite
  D3Action t3;              // empty unless p = 3
  std::array<double, 4> deltas{0.0, 0.0, 0.0, 0.0};  // deltas[i], i = 1..3
  Provenance provenance = Provenance::exact;

  int dimension() const { return static_cast<int>(center.size()); }
  bool inexact_family() const {
    return deltas[1] > 0.0 || deltas[2] > 0.0 || deltas[3] > 0.0;
  }
  /* Coefficient of ||s||^(p+1) in the model. */
  double reg_coeff() const {
    return inexact_family() ? H / ((p + 1) * factorial(p - 1))
                            : H / factorial(p + 1);
  }
};

/* Assembles the model of order p with weight H >= 0 from a derivative
 * bundle (which must carry order >= p) and an optional composite.  H = 0
 * gives the plain Taylor polynomial, which can be evaluated but not solved
 * (the subsolvers require H > 0).  deltas[i] must be zero for i > p and
 * nonnegative elsewhere. */
ModelState build_model(const DerivativeBundle& bundle, int p, double H,
                       const std::array<double, 4>& deltas = {0, 0, 0, 0},
                       const QuadraticComposite* composite = nullptr);

double model_value(const ModelState& state, const Vector& s);

/* Gradient of the model at step s.  Performs exactly one t3 call when
 * p = 3.  Throws NonsmoothPointError at s = 0 when delta_1 > 0 (the norm
 * term has no gradient there; the subsolvers handle that case via the
 * subdifferential instead). */
Vector model_gradient(const ModelState& state, const Vector& s);

/* Result of randomized convexity probing of the model. */
struct ConvexityReport {
  double min_quadratic_form = 0.0;
  double max_quadratic_form = 0.0;
  int samples = 0;
  bool passed = false;
  Vector witness_point;      // s achieving the minimum
  Vector witness_direction;  // h achieving the minimum
};

/* Estimates directional second derivatives h' m''(center + s) h of the
 * model at `samples` random (s, h) pairs with ||s|| <= radius and unit h,
 * by central differences of model_gradient along h.  passed is true when
 * the smallest value is >= -tol * max(1, |largest value|).  A failure is
 * evidence that H is too small for the tensor term (for p = 3 convexity
 * needs H >= 3 * L3). */
ConvexityReport convexity_probe(const ModelState& state, int samples,
                                double radius, std::uint64_t seed,
                                double tol = 1e-9);

}  // namespace tensoropt
