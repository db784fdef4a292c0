#pragma once

#include "tensoropt/model.hpp"
#include "tensoropt/oracle.hpp"
#include "tensoropt/rng.hpp"

#include <Eigen/QR>

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

namespace tensoropt::testutil {

/* f(t) = t^4 in one dimension: the simplest objective with a nonzero third
 * derivative.  f'''(t) = 24 t is 24-Lipschitz. */
class Mono4 final : public Objective {
 public:
  int dimension() const override { return 1; }
  int order_available() const override { return 3; }
  OracleMeta meta() const override {
    OracleMeta m;
    m.order_available = 3;
    m.lipschitz[3] = 24.0;
    return m;
  }
  double value(const Vector& x) const override {
    const double t = x(0);
    return t * t * t * t;
  }
  Vector gradient(const Vector& x) const override {
    const double t = x(0);
    Vector g(1);
    g(0) = 4.0 * t * t * t;
    return g;
  }
  Matrix hessian(const Vector& x) const override {
    const double t = x(0);
    Matrix h(1, 1);
    h(0, 0) = 12.0 * t * t;
    return h;
  }
  Vector d3_apply(const Vector& x, const Vector& h) const override {
    Vector r(1);
    r(0) = 24.0 * x(0) * h(0) * h(0);
    return r;
  }
};

/* f(y) = 1/2 ||y||^2, second derivatives only. */
class HalfSq final : public Objective {
 public:
  explicit HalfSq(int d) : d_(d) {}
  int dimension() const override { return d_; }
  int order_available() const override { return 2; }
  double value(const Vector& x) const override { return 0.5 * x.squaredNorm(); }
  Vector gradient(const Vector& x) const override { return x; }
  Matrix hessian(const Vector& x) const override {
    return Matrix::Identity(x.size(), x.size());
  }

 private:
  int d_;
};

/* f(x) = 1/2 x'Qx + b'x + c with exact derivatives through order 3
 * (the third derivative is identically zero). */
class DenseQuadratic final : public Objective {
 public:
  DenseQuadratic(Matrix Q, Vector b, double c = 0.0)
      : Q_(std::move(Q)), b_(std::move(b)), c_(c) {}
  int dimension() const override { return static_cast<int>(Q_.rows()); }
  int order_available() const override { return 3; }
  double value(const Vector& x) const override {
    return 0.5 * x.dot(Q_ * x) + b_.dot(x) + c_;
  }
  Vector gradient(const Vector& x) const override { return Q_ * x + b_; }
  Matrix hessian(const Vector&) const override { return Q_; }
  Vector d3_apply(const Vector& x, const Vector&) const override {
    return Vector::Zero(x.size());
  }

 private:
  Matrix Q_;
  Vector b_;
  double c_;
};

/* f(x) = 1/2 x'Qx + beta/4 ||x||^4: genuinely convex with a 6*beta-Lipschitz
 * third derivative — the canonical source of valid order-3 bundles. */
class QuarticTest final : public Objective {
 public:
  QuarticTest(Matrix Q, double beta) : Q_(std::move(Q)), beta_(beta) {}
  int dimension() const override { return static_cast<int>(Q_.rows()); }
  int order_available() const override { return 3; }
  OracleMeta meta() const override {
    OracleMeta m;
    m.order_available = 3;
    m.lipschitz[3] = 6.0 * beta_;
    return m;
  }
  double value(const Vector& x) const override {
    const double n2 = x.squaredNorm();
    return 0.5 * x.dot(Q_ * x) + beta_ / 4.0 * n2 * n2;
  }
  Vector gradient(const Vector& x) const override {
    return Q_ * x + beta_ * x.squaredNorm() * x;
  }
  Matrix hessian(const Vector& x) const override {
    const auto d = x.size();
    return Q_ + beta_ * (x.squaredNorm() * Matrix::Identity(d, d) +
                         2.0 * x * x.transpose());
  }
  Vector d3_apply(const Vector& x, const Vector& h) const override {
    return beta_ * (4.0 * x.dot(h) * h + 2.0 * h.squaredNorm() * x);
  }

 private:
  Matrix Q_;
  double beta_;
};

/* Random symmetric positive semidefinite matrix with eigenvalues in
 * [lo, hi]. */
inline Matrix random_psd(Rng& rng, int d, double lo, double hi) {
  Matrix G(d, d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix U = qr.householderQ();
  std::uniform_real_distribution<double> unif(lo, hi);
  Vector lam(d);
  for (int i = 0; i < d; ++i) lam(i) = unif(rng);
  Matrix A = U * lam.asDiagonal() * U.transpose();
  return 0.5 * (A + A.transpose());
}

/* Evaluates `obj` at x through `order` and assembles the model in one go. */
inline ModelState state_from(const Objective& obj, const Vector& x, int p,
                             double H,
                             const std::array<double, 4>& deltas = {0, 0, 0, 0},
                             const QuadraticComposite* composite = nullptr) {
  // The bundle's third-derivative closure borrows the oracle, so keep one
  // alive inside the returned state's tensor action.
  auto oracle = std::make_shared<CountingOracle>(obj);
  DerivativeBundle b = eval_bundle(*oracle, x, p);
  if (b.d3_action)
    b.d3_action = [oracle, inner = b.d3_action](const Vector& h) {
      return inner(h);
    };
  return build_model(b, p, H, deltas, composite);
}

/* Builds a ModelState directly from raw pieces (no objective behind it);
 * only valid for cases where detached data is legitimate (p <= 2, or p = 3
 * with a zero tensor). */
inline ModelState raw_state(int p, double H, double f_center, Vector g0,
                            std::optional<Matrix> A = std::nullopt,
                            D3Action t3 = nullptr,
                            const std::array<double, 4>& deltas = {0, 0, 0,
                                                                   0}) {
  ModelState st;
  st.center = Vector::Zero(g0.size());
  st.p = p;
  st.H = H;
  st.f_center = f_center;
  st.g0 = std::move(g0);
  st.A = std::move(A);
  if (p >= 3 && !t3) {
    t3 = [](const Vector& h) { return Vector::Zero(h.size()); };
  }
  st.t3 = std::move(t3);
  st.deltas = deltas;
  return st;
}

}  // namespace tensoropt::testutil
