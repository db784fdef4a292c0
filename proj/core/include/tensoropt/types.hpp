#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>

namespace tensoropt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/* Action of a third derivative tensor on a repeated direction:
 * h -> D3 f(x)[h, h, .]  (a vector of the same dimension as h). */
using D3Action = std::function<Vector(const Vector&)>;

/* Where the derivative data in a bundle came from. */
enum class Provenance { exact, sampled, finite_difference };

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline bool is_known(double v) { return !std::isnan(v); }

/* Scale-aware relative difference used by derivative checks:
 * ||a - b|| / max(1, ||a||, ||b||). */
inline double relative_diff(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max({1.0, a.norm(), b.norm()});
}

inline double relative_diff(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

/* Exact factorial for the small orders used by the models (n <= 20). */
inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace tensoropt
