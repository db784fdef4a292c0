// Microbenchmarks for the model subsolvers: the second-order factor-and-root
// path, the third-order Bregman iteration, and the shared radial root solve.

#include "tensoropt/subsolve.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace tensoropt;

ModelState quadratic_state(int d, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Matrix G(d, d);
  for (int c = 0; c < d; ++c) G.col(c) = gaussian_vector(rng, d);
  ModelState st;
  st.center = Vector::Zero(d);
  st.p = 2;
  st.H = 3.0;
  st.g0 = gaussian_vector(rng, d);
  st.A = Matrix(G.transpose() * G / d);
  return st;
}

ModelState cubic_state(int d, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Matrix G(d, d);
  for (int c = 0; c < d; ++c) G.col(c) = gaussian_vector(rng, d);
  const Matrix Q = G.transpose() * G / d;
  const double beta = 0.5;
  const Vector xc = ball_vector(rng, d, 1.0);
  ModelState st;
  st.center = Vector::Zero(d);
  st.p = 3;
  st.H = 36.0 * beta;
  st.g0 = Q * xc + beta * xc.squaredNorm() * xc;
  st.A = Matrix(Q + beta * (xc.squaredNorm() * Matrix::Identity(d, d) +
                            2.0 * xc * xc.transpose()));
  st.t3 = [xc, beta](const Vector& h) {
    return Vector(beta * (4.0 * xc.dot(h) * h + 2.0 * h.squaredNorm() * xc));
  };
  return st;
}

void BM_SolveSecondOrder(benchmark::State& state) {
  const ModelState st = quadratic_state(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) {
    SubsolveResult res = solve_p2(st);
    benchmark::DoNotOptimize(res.step);
  }
}
BENCHMARK(BM_SolveSecondOrder)->Arg(10)->Arg(50)->Arg(200);

void BM_SolveThirdOrderBdgm(benchmark::State& state) {
  const ModelState st = cubic_state(static_cast<int>(state.range(0)), 11);
  SubsolveOptions opts;
  for (auto _ : state) {
    SubsolveResult res = solve_p3_bdgm(st, opts);
    benchmark::DoNotOptimize(res.step);
  }
}
BENCHMARK(BM_SolveThirdOrderBdgm)->Arg(10)->Arg(30);

void BM_RadialRootSolve(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const ModelState st = quadratic_state(d, 3);
  const EigenFactor factor = EigenFactor::decompose(*st.A);
  const double q = st.H / 2.0;  // order-2 stationarity: (A + (H/2) r I) s = -g
  for (auto _ : state) {
    RadialResult res =
        radial_root_solve(factor, st.g0, [q](double r) { return q * r; });
    benchmark::DoNotOptimize(res.r);
  }
}
BENCHMARK(BM_RadialRootSolve)->Arg(10)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
