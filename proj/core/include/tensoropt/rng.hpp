#pragma once

#include "tensoropt/types.hpp"

#include <random>

namespace tensoropt {

using Rng = std::mt19937_64;

/* Derives an independent stream from a base seed and a stream index.
 * Distinct indices give uncorrelated engines, which keeps concurrent
 * benchmark rows deterministic regardless of scheduling. */
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  const std::uint64_t mixed = stream ^ 0x9e3779b97f4a7c15ull;
  std::seed_seq seq{seed, mixed};
  return Rng(seq);
}

inline Vector gaussian_vector(Rng& rng, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = normal(rng);
  return v;
}

/* Uniform direction on the unit sphere. */
inline Vector unit_vector(Rng& rng, int d) {
  Vector v = gaussian_vector(rng, d);
  double n = v.norm();
  while (n == 0.0) {  // astronomically unlikely; redraw for safety
    v = gaussian_vector(rng, d);
    n = v.norm();
  }
  return v / n;
}

/* Uniform draw from the closed ball of the given radius. */
inline Vector ball_vector(Rng& rng, int d, double radius) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = radius * std::pow(unif(rng), 1.0 / d);
  return r * unit_vector(rng, d);
}

}  // namespace tensoropt
