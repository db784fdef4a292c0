// End-to-end solver benchmarks on the built-in problem families.

#include "tensoropt/driver.hpp"
#include "tensoropt/problems.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace tensoropt;

void BM_MsnSecondOrderChain(benchmark::State& state) {
  ProblemSpec spec;
  spec.family = Family::worst_case_fp;
  spec.d = static_cast<int>(state.range(0));
  spec.p_target = 2;
  BuiltProblem built = make_problem(spec);
  SolverConfig cfg;
  cfg.p = 2;
  cfg.H = 3.0 * built.spec.lipschitz[2];
  cfg.max_outer = 20;
  cfg.eps_grad = 1e-12;
  const Vector x0 = default_start(built.spec);
  for (auto _ : state) {
    Trace t = msn_run(*built.objective, x0, cfg);
    benchmark::DoNotOptimize(t.rows.back().f_value);
  }
}
BENCHMARK(BM_MsnSecondOrderChain)->Arg(10)->Arg(20)->Arg(50)
    ->Unit(benchmark::kMillisecond);

void BM_BasicThirdOrderQuartic(benchmark::State& state) {
  ProblemSpec spec;
  spec.family = Family::quartic_quadratic;
  spec.d = static_cast<int>(state.range(0));
  spec.p_target = 3;
  spec.data_seed = 2;
  BuiltProblem built = make_problem(spec);
  SolverConfig cfg;
  cfg.p = 3;
  cfg.H = 4.0 * built.spec.lipschitz[3];
  cfg.max_outer = 15;
  cfg.eps_grad = 1e-12;
  const Vector x0 = default_start(built.spec);
  for (auto _ : state) {
    Trace t = basic_tensor_run(*built.objective, x0, cfg);
    benchmark::DoNotOptimize(t.rows.back().f_value);
  }
}
BENCHMARK(BM_BasicThirdOrderQuartic)->Arg(10)->Arg(25)
    ->Unit(benchmark::kMillisecond);

void BM_RidgeLogisticMsn(benchmark::State& state) {
  ProblemSpec spec;
  spec.family = Family::logistic;
  spec.d = 20;
  spec.samples = state.range(0);
  spec.ridge = 1e-2;
  spec.data_seed = 7;
  BuiltProblem built = make_problem(spec);
  SolverConfig cfg;
  cfg.p = 2;
  cfg.H = 3.0 * built.spec.lipschitz[2];
  cfg.max_outer = 30;
  cfg.eps_grad = 1e-10;
  const Vector x0 = default_start(built.spec);
  for (auto _ : state) {
    Trace t = msn_run(*built.objective, x0, cfg);
    benchmark::DoNotOptimize(t.rows.back().grad_norm);
  }
}
BENCHMARK(BM_RidgeLogisticMsn)->Arg(200)->Arg(1000)
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
