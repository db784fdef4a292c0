#include "tensoropt/oracle.hpp"

#include <cmath>

namespace tensoropt {

namespace {
const double kCbrtEps = std::cbrt(std::numeric_limits<double>::epsilon());
}

double default_fd_tau(const Vector& x, const Vector& h) {
  return kCbrtEps * std::max(1.0, x.norm()) / std::max(1.0, h.norm());
}

Vector fd_third_directional(CountingOracle& oracle, const Vector& x,
                            const Vector& h, double tau,
                            const Vector* grad_center) {
  if (x.size() != h.size())
    throw DomainError("fd_third_directional: dimension mismatch");
  if (h.norm() == 0.0) return Vector::Zero(x.size());
  if (tau <= 0.0) tau = default_fd_tau(x, h);

  const Vector gp = oracle.gradient(x + tau * h);
  const Vector gm = oracle.gradient(x - tau * h);
  const Vector gc = grad_center ? *grad_center : oracle.gradient(x);
  return (gp - 2.0 * gc + gm) / (tau * tau);
}

DerivativeBundle eval_bundle(CountingOracle& oracle, const Vector& x,
                             int order, bool fd_third, double fd_tau) {
  if (order < 1 || order > 3)
    throw DomainError("eval_bundle: order must be in {1, 2, 3}");
  if (x.size() != oracle.dimension())
    throw DomainError("eval_bundle: point has wrong dimension");
  if (!x.allFinite())
    throw DomainError("eval_bundle: point has non-finite entries");
  const int have = oracle.order_available();
  const int need = (order == 3 && fd_third) ? 2 : order;
  if (need > have)
    throw CapabilityError("eval_bundle: oracle provides order " +
                          std::to_string(have) + ", requested " +
                          std::to_string(order));

  DerivativeBundle b;
  b.point = x;
  b.order = order;
  b.value = oracle.value(x);
  b.gradient = oracle.gradient(x);
  if (order >= 2) b.hessian = oracle.hessian(x);
  if (order >= 3) {
    if (fd_third) {
      // Differencing gradients around x; the center gradient is reused so
      // each action costs two gradient evaluations.
      Vector x0 = x;
      Vector g0 = b.gradient;
      b.d3_action = [&oracle, x0, g0, fd_tau](const Vector& h) {
        return fd_third_directional(oracle, x0, h, fd_tau, &g0);
      };
      b.provenance = Provenance::finite_difference;
    } else {
      Vector x0 = x;
      b.d3_action = [&oracle, x0](const Vector& h) {
        return oracle.d3_apply(x0, h);
      };
    }
  }
  return b;
}

double audit_inexactness(const DerivativeBundle& approx,
                         const DerivativeBundle& exact, int order, int trials,
                         Rng& rng) {
  if (order < 1 || order > 3)
    throw DomainError("audit_inexactness: order must be in {1, 2, 3}");
  if (approx.point.size() != exact.point.size() ||
      (approx.point - exact.point).norm() != 0.0)
    throw DomainError("audit_inexactness: bundles are at different points");
  if (approx.order < order || exact.order < order)
    throw CapabilityError("audit_inexactness: bundles lack the requested order");
  if (trials < 1) throw DomainError("audit_inexactness: trials must be >= 1");

  const int d = static_cast<int>(approx.point.size());
  if (order == 1) return (approx.gradient - exact.gradient).norm();

  double worst = 0.0;
  if (order == 2) {
    const Matrix diff = *approx.hessian - *exact.hessian;
    for (int t = 0; t < trials; ++t) {
      const Vector h = unit_vector(rng, d);
      worst = std::max(worst, (diff * h).norm());
    }
  } else {
    for (int t = 0; t < trials; ++t) {
      const Vector h = unit_vector(rng, d);
      worst = std::max(worst, (approx.d3_action(h) - exact.d3_action(h)).norm());
    }
  }
  return worst;
}

Vector fd_gradient(CountingOracle& oracle, const Vector& x, double step) {
  const int d = static_cast<int>(x.size());
  if (step <= 0.0) step = kCbrtEps * std::max(1.0, x.norm());
  Vector g(d);
  Vector e = x;
  for (int i = 0; i < d; ++i) {
    const double xi = x[i];
    e[i] = xi + step;
    const double fp = oracle.value(e);
    e[i] = xi - step;
    const double fm = oracle.value(e);
    e[i] = xi;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

Vector fd_hessian_apply(CountingOracle& oracle, const Vector& x,
                        const Vector& h, double step) {
  if (h.norm() == 0.0) return Vector::Zero(x.size());
  if (step <= 0.0) step = kCbrtEps * std::max(1.0, x.norm()) / h.norm();
  const Vector gp = oracle.gradient(x + step * h);
  const Vector gm = oracle.gradient(x - step * h);
  return (gp - gm) / (2.0 * step);
}

}  // namespace tensoropt
