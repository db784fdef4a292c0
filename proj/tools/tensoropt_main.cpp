#include "tensoropt/distsim.hpp"
#include "tensoropt/report.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using tensoropt::DomainError;
using ordered_json = nlohmann::ordered_json;

double parse_h_flag(const std::string& text) {
  if (text == "auto") return 0.0;  // resolved from the problem constants
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !(v > 0.0))
    throw DomainError("--H must be 'auto' or a positive number, got '" + text +
                      "'");
  return v;
}

double parse_sigma_flag(const std::string& text) {
  if (text == "auto") return -1.0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !(v >= 0.0))
    throw DomainError("--sigma must be 'auto' or a nonnegative number, got '" +
                      text + "'");
  return v;
}

struct SolveArgs {
  std::string problem;
  std::string method = "msn";
  int p = 2;
  std::string H = "auto";
  double eps = 1e-8;
  long long max_iter = 100;
  bool superfast = false;
  std::uint64_t seed = 0;
  std::string out;
  bool wall_clock = false;
};

int cmd_solve(const SolveArgs& a) {
  tensoropt::RunRequest req;
  req.spec = tensoropt::load_problem_spec(a.problem);
  req.method = tensoropt::parse_method(a.method);
  req.problem_label = a.problem;
  req.wall_clock = a.wall_clock;
  req.cfg.p = a.p;
  req.cfg.H = parse_h_flag(a.H);
  req.cfg.eps_grad = a.eps;
  req.cfg.max_outer = a.max_iter;
  req.cfg.superfast = a.superfast;
  req.cfg.seed = a.seed;

  tensoropt::RunOutcome out = tensoropt::execute_run(req);
  if (!a.out.empty()) out.trace.write_csv_file(a.out, a.wall_clock);
  std::cout << tensoropt::summary_to_json(out.summary) << "\n";
  return out.trace.status == tensoropt::TerminationStatus::budget_exhausted ? 2
                                                                           : 0;
}

struct BenchArgs {
  std::string suite;
  std::string out;
  int threads = 0;  // 0 = honor TENSOROPT_THREADS (default 1)
};

int cmd_bench(const BenchArgs& a) {
  const tensoropt::Suite suite = tensoropt::load_suite(a.suite);
  const tensoropt::SuiteResult result = tensoropt::run_suite(suite, a.threads);
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw DomainError("cannot open '" + a.out + "' for writing");
    f << result.json << "\n";
  }
  std::cout << result.json << "\n";
  return result.any_error ? 1 : 0;
}

struct PlanArgs {
  int p = 2;
  std::string schedule = "plain";
  std::vector<double> M;
  std::vector<double> L;
  double H = 0.0;
  double eps = 0.0;
  double radius = 0.0;
  double delta = 0.1;
};

int cmd_plan(const PlanArgs& a) {
  tensoropt::BatchSchedule schedule;
  if (a.schedule == "plain") {
    schedule = tensoropt::BatchSchedule::plain;
  } else if (a.schedule == "accelerated") {
    schedule = tensoropt::BatchSchedule::accelerated;
  } else {
    throw DomainError("--schedule must be 'plain' or 'accelerated', got '" +
                      a.schedule + "'");
  }
  const tensoropt::BatchPlan plan = tensoropt::plan_batches(
      a.p, schedule, a.M, a.L, a.H, a.eps, a.radius, a.delta);

  ordered_json j;
  j["p"] = plan.p;
  j["schedule"] = a.schedule;
  j["n"] = plan.n;
  j["raw"] = plan.raw;
  j["eps_exponent"] = plan.eps_exponent;
  j["M"] = plan.noise;
  j["L"] = plan.lipschitz;
  j["H"] = plan.H;
  j["eps"] = plan.eps;
  j["radius"] = plan.radius;
  j["delta"] = plan.confidence;
  std::cout << j.dump() << "\n";
  return 0;
}

struct DistArgs {
  int workers = 4;
  long long samples = 200;
  int d = 5;
  double mu_f = 0.1;
  std::string sigma = "auto";
  int inner_p = 2;
  bool identical_data = false;
  long long rounds = 100;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  std::string out;
  bool wall_clock = false;
};

int cmd_distsim(const DistArgs& a) {
  tensoropt::DistConfig cfg;
  cfg.workers = a.workers;
  cfg.samples = a.samples;
  cfg.d = a.d;
  cfg.mu_f = a.mu_f;
  cfg.sigma = parse_sigma_flag(a.sigma);
  cfg.identical_data = a.identical_data;
  cfg.inner.p = a.inner_p;
  cfg.rounds_max = a.rounds;
  cfg.eps = a.eps;
  cfg.seed = a.seed;

  const tensoropt::WorkerSet workers = tensoropt::make_workers(cfg);
  const tensoropt::Vector x0 = tensoropt::Vector::Zero(cfg.d);
  const tensoropt::DistTrace trace =
      tensoropt::run_distributed(cfg, workers, x0);
  if (!a.out.empty())
    tensoropt::write_dist_csv_file(trace, a.out, a.wall_clock);

  ordered_json j;
  j["workers"] = cfg.workers;
  j["samples"] = cfg.samples;
  j["d"] = cfg.d;
  j["mu_f"] = cfg.mu_f;
  j["sigma_used"] = trace.sigma_used;
  j["mu_rho"] = trace.mu_rho;
  j["kappa_rho"] = trace.kappa_rho;
  j["rounds"] = trace.rows.size();
  j["comm_rounds"] = trace.rows.empty() ? 0 : trace.rows.back().comm_rounds;
  j["converged"] = trace.converged;
  if (!trace.rows.empty()) {
    j["final_gap"] = trace.rows.back().f_gap;
    j["final_grad"] = trace.rows.back().grad_norm;
  }
  std::cout << j.dump() << "\n";
  return trace.converged ? 0 : 2;
}

struct CheckArgs {
  std::string problem;
  int points = 20;
  std::uint64_t seed = 0;
};

int cmd_check(const CheckArgs& a) {
  const tensoropt::BuiltProblem built =
      tensoropt::make_problem(tensoropt::load_problem_spec(a.problem));
  tensoropt::CountingOracle oracle(*built.objective);
  const int d = oracle.dimension();
  const int order = oracle.order_available();
  tensoropt::Rng rng = tensoropt::make_rng(a.seed, 7);
  const tensoropt::Vector x0 = tensoropt::default_start(built.spec);

  const double tol[4] = {0.0, 1e-6, 1e-5, 1e-3};
  double worst[4] = {0.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < a.points; ++i) {
    const tensoropt::Vector x = x0 + tensoropt::ball_vector(rng, d, 1.0);
    const tensoropt::Vector h = tensoropt::unit_vector(rng, d);
    worst[1] =
        std::max(worst[1], tensoropt::relative_diff(
                               oracle.gradient(x),
                               tensoropt::fd_gradient(oracle, x)));
    if (order >= 2)
      worst[2] = std::max(
          worst[2],
          tensoropt::relative_diff(
              tensoropt::Vector(oracle.hessian(x) * h),
              tensoropt::fd_hessian_apply(oracle, x, h)));
    if (order >= 3)
      worst[3] = std::max(
          worst[3], tensoropt::relative_diff(
                        oracle.d3_apply(x, h),
                        tensoropt::fd_third_directional(oracle, x, h)));
  }

  const char* names[4] = {"", "gradient", "hessian action", "third action"};
  bool all_pass = true;
  for (int i = 1; i <= 3; ++i) {
    if (i > order) {
      std::cout << "order " << i << " (" << names[i] << "): not provided\n";
      continue;
    }
    const bool pass = worst[i] <= tol[i];
    all_pass = all_pass && pass;
    std::cout << "order " << i << " (" << names[i] << "): max_rel "
              << worst[i] << "  tol " << tol[i] << "  "
              << (pass ? "PASS" : "FAIL") << "\n";
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tensoropt: high-order tensor methods for convex optimization"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  CLI::App* solve = app.add_subcommand("solve", "Run one solver on one problem");
  solve->add_option("--problem", solve_args.problem, "Problem spec file")
      ->required();
  solve->add_option("--method", solve_args.method,
                    "msn | basic | restart | stochastic");
  solve->add_option("--p", solve_args.p, "Method order (1, 2 or 3)");
  solve->add_option("--H", solve_args.H, "Regularization weight or 'auto'");
  solve->add_option("--eps", solve_args.eps, "Gradient-norm stop tolerance");
  solve->add_option("--max-iter", solve_args.max_iter, "Outer iteration budget");
  solve->add_flag("--superfast", solve_args.superfast,
                  "Finite-difference third derivatives (p = 3)");
  solve->add_option("--seed", solve_args.seed, "RNG seed");
  solve->add_option("--out", solve_args.out, "Trace CSV output path");
  solve->add_flag("--wall-clock", solve_args.wall_clock,
                  "Record wall time in the CSV (breaks bitwise reruns)");

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "Run a benchmark suite file");
  bench->add_option("--suite", bench_args.suite, "Suite file")->required();
  bench->add_option("--out", bench_args.out, "Also write the JSON report here");
  bench->add_option("--threads", bench_args.threads,
                    "Worker threads (0 = TENSOROPT_THREADS, default 1)");

  PlanArgs plan_args;
  CLI::App* plan = app.add_subcommand("plan", "Mini-batch size planner");
  plan->add_option("--p", plan_args.p, "Method order")->required();
  plan->add_option("--schedule", plan_args.schedule, "plain | accelerated");
  plan->add_option("--M", plan_args.M, "Noise bounds M_1..M_p")
      ->required()
      ->delimiter(',');
  plan->add_option("--L", plan_args.L, "Lipschitz constants L_0..L_p")
      ->required()
      ->delimiter(',');
  plan->add_option("--H", plan_args.H, "Regularization weight")->required();
  plan->add_option("--eps", plan_args.eps, "Target accuracy")->required();
  plan->add_option("--radius", plan_args.radius, "Level-set diameter bound")
      ->required();
  plan->add_option("--delta", plan_args.delta, "Failure probability");

  DistArgs dist_args;
  CLI::App* dist = app.add_subcommand(
      "distsim", "Distributed optimization simulator (synthetic logistic)");
  dist->add_option("--workers", dist_args.workers, "Worker count");
  dist->add_option("--samples", dist_args.samples, "Samples per worker");
  dist->add_option("--d", dist_args.d, "Dimension");
  dist->add_option("--mu-f", dist_args.mu_f, "Ridge (strong convexity)");
  dist->add_option("--sigma", dist_args.sigma,
                   "Similarity bound or 'auto'");
  dist->add_option("--inner-p", dist_args.inner_p, "Master solver order");
  dist->add_flag("--identical-data", dist_args.identical_data,
                 "All workers hold the master's data");
  dist->add_option("--rounds", dist_args.rounds, "Outer round budget");
  dist->add_option("--eps", dist_args.eps, "Gradient-norm stop tolerance");
  dist->add_option("--seed", dist_args.seed, "RNG seed");
  dist->add_option("--out", dist_args.out, "Round CSV output path");
  dist->add_flag("--wall-clock", dist_args.wall_clock,
                 "Record wall time in the CSV");

  CheckArgs check_args;
  CLI::App* check = app.add_subcommand(
      "check", "Finite-difference consistency check of a problem's oracle");
  check->add_option("--problem", check_args.problem, "Problem spec file")
      ->required();
  check->add_option("--points", check_args.points, "Probe points");
  check->add_option("--seed", check_args.seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_args);
    if (bench->parsed()) return cmd_bench(bench_args);
    if (plan->parsed()) return cmd_plan(plan_args);
    if (dist->parsed()) return cmd_distsim(dist_args);
    if (check->parsed()) return cmd_check(check_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
