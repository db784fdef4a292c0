#include "tensoropt/model.hpp"

#include <cmath>

namespace tensoropt {

ModelState build_model(const DerivativeBundle& bundle, int p, double H,
                       const std::array<double, 4>& deltas,
                       const QuadraticComposite* composite) {
  if (p < 1 || p > 3) throw DomainError("build_model: p must be in {1, 2, 3}");
  // H = 0 yields the plain Taylor polynomial, useful for evaluation; the
  // subsolvers reject it because the minimizer is then unbounded in general.
  if (!(H >= 0.0)) throw DomainError("build_model: H must be nonnegative");
  if (bundle.order < p)
    throw DomainError("build_model: bundle carries order " +
                      std::to_string(bundle.order) + ", need " +
                      std::to_string(p));
  for (int i = 1; i <= 3; ++i) {
    if (deltas[i] < 0.0)
      throw DomainError("build_model: deltas must be nonnegative");
    if (i > p && deltas[i] > 0.0)
      throw DomainError("build_model: delta_" + std::to_string(i) +
                        " given but model order is " + std::to_string(p));
  }

  ModelState st;
  st.center = bundle.point;
  st.p = p;
  st.H = H;
  st.deltas = deltas;
  st.deltas[0] = 0.0;
  st.provenance = bundle.provenance;
  st.f_center = bundle.value;
  st.g0 = bundle.gradient;
  if (p >= 2) st.A = *bundle.hessian;
  if (p >= 3) st.t3 = bundle.d3_action;

  if (composite) {
    st.f_center += composite->value(st.center);
    st.g0 += composite->grad(st.center);
    if (composite->Q) {
      if (st.A)
        *st.A += *composite->Q;
      else
        st.A = *composite->Q;  // p = 1 with quadratic composite
    }
  }
  return st;
}

double model_value(const ModelState& state, const Vector& s) {
  if (s.size() != state.center.size())
    throw DomainError("model_value: step has wrong dimension");
  const double r = s.norm();
  double v = state.f_center + state.g0.dot(s);
  if (state.A) v += 0.5 * s.dot(*state.A * s);
  if (state.p >= 3) v += state.t3(s).dot(s) / 6.0;
  if (state.inexact_family()) {
    // delta_i / (i (i-2)!) ||s||^i with the i = 1 coefficient fixed to 1.
    if (state.deltas[1] > 0.0) v += state.deltas[1] * r;
    if (state.deltas[2] > 0.0) v += state.deltas[2] / 2.0 * r * r;
    if (state.deltas[3] > 0.0) v += state.deltas[3] / 3.0 * r * r * r;
  }
  v += state.reg_coeff() * std::pow(r, state.p + 1);
  return v;
}

Vector model_gradient(const ModelState& state, const Vector& s) {
  if (s.size() != state.center.size())
    throw DomainError("model_gradient: step has wrong dimension");
  const double r = s.norm();
  if (state.deltas[1] > 0.0 && r == 0.0)
    throw NonsmoothPointError(
        "model_gradient: not differentiable at s = 0 with delta_1 > 0");

  Vector g = state.g0;
  if (state.A) g += *state.A * s;
  if (state.p >= 3) g += 0.5 * state.t3(s);
  if (state.inexact_family()) {
    if (state.deltas[1] > 0.0) g += state.deltas[1] / r * s;
    if (state.deltas[2] > 0.0) g += state.deltas[2] * s;
    if (state.deltas[3] > 0.0) g += state.deltas[3] * r * s;
  }
  // d/ds [ C ||s||^(p+1) ] = (p+1) C ||s||^(p-1) s
  g += (state.p + 1) * state.reg_coeff() * std::pow(r, state.p - 1) * s;
  return g;
}

ConvexityReport convexity_probe(const ModelState& state, int samples,
                                double radius, std::uint64_t seed,
                                double tol) {
  if (samples < 1) throw DomainError("convexity_probe: samples must be >= 1");
  if (!(radius > 0.0)) throw DomainError("convexity_probe: radius must be > 0");

  Rng rng = make_rng(seed);
  const int d = state.dimension();
  // Step for differencing the model gradient; the model is polynomial in s
  // plus norm powers, so a square-root-of-eps step is accurate enough.
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon()) *
                     std::max(1.0, radius);

  ConvexityReport rep;
  rep.samples = samples;
  rep.min_quadratic_form = std::numeric_limits<double>::infinity();
  rep.max_quadratic_form = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < samples; ++t) {
    const Vector s = ball_vector(rng, d, radius);
    const Vector h = unit_vector(rng, d);
    const Vector gp = model_gradient(state, s + eps * h);
    const Vector gm = model_gradient(state, s - eps * h);
    const double q = (gp - gm).dot(h) / (2.0 * eps);
    if (q < rep.min_quadratic_form) {
      rep.min_quadratic_form = q;
      rep.witness_point = s;
      rep.witness_direction = h;
    }
    rep.max_quadratic_form = std::max(rep.max_quadratic_form, q);
  }
  rep.passed = rep.min_quadratic_form >=
               -tol * std::max(1.0, std::abs(rep.max_quadratic_form));
  return rep;
}

}  // namespace tensoropt
