#include "tensoropt/distsim.hpp"

#include "tensoropt/problems.hpp"
#include "tensoropt/trace.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tensoropt {

namespace {

void validate(const DistConfig& cfg) {
  if (cfg.workers < 1) throw DomainError("distsim: need at least one worker");
  if (cfg.samples < 1) throw DomainError("distsim: need at least one sample");
  if (cfg.d < 1) throw DomainError("distsim: d must be >= 1");
  if (!(cfg.mu_f > 0.0)) throw DomainError("distsim: mu_f must be positive");
  if (cfg.rounds_max < 0) throw DomainError("distsim: rounds_max must be >= 0");
  if (!(cfg.eps > 0.0)) throw DomainError("distsim: eps must be positive");
}

double spectral_norm(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  return std::max(std::abs(es.eigenvalues().minCoeff()),
                  std::abs(es.eigenvalues().maxCoeff()));
}

/* H for the master's local subproblem when the inner config leaves it
 * unset: the standard (p+1) L_p rule on the local loss, plus sigma for
 * p = 1 where the quadratic composite stiffens the gradient. */
double derive_inner_weight(const SolverConfig& inner, const OracleMeta& meta,
                           double sigma) {
  const double L = meta.lipschitz[static_cast<std::size_t>(inner.p)];
  if (!is_known(L))
    throw CapabilityError(
        "distsim: inner solver weight H not set and the local loss has no "
        "stored constant for p = " +
        std::to_string(inner.p));
  double H = (inner.p + 1) * L;
  if (inner.p == 1) H += 2.0 * sigma;
  return H;
}

}  // namespace

WorkerSet make_workers(const DistConfig& cfg) {
  validate(cfg);
  Rng rng = make_rng(cfg.seed, 0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const Vector planted = gaussian_vector(rng, cfg.d);

  const long long n = cfg.samples;
  const long long total = n * cfg.workers;
  Matrix pooled_features(total, cfg.d);
  Vector pooled_labels(total);

  WorkerSet set;
  set.d = cfg.d;
  set.mu_f = cfg.mu_f;
  Matrix first_block;
  Vector first_labels;
  for (int w = 0; w < cfg.workers; ++w) {
    Matrix block(n, cfg.d);
    Vector labels(n);
    if (cfg.identical_data && w > 0) {
      block = first_block;
      labels = first_labels;
    } else {
      for (Eigen::Index i = 0; i < block.rows(); ++i)
        for (Eigen::Index j = 0; j < block.cols(); ++j)
          block(i, j) = unif(rng);
      for (Eigen::Index i = 0; i < labels.size(); ++i)
        labels(i) = block.row(i).dot(planted) >= 0.0 ? 1.0 : -1.0;
      if (w == 0) {
        first_block = block;
        first_labels = labels;
      }
    }
    pooled_features.middleRows(w * n, n) = block;
    pooled_labels.segment(w * n, n) = labels;
    set.local.push_back(
        make_logistic_objective(std::move(block), std::move(labels), cfg.mu_f));
  }
  set.pooled = make_logistic_objective(std::move(pooled_features),
                                       std::move(pooled_labels), cfg.mu_f);
  return set;
}

double estimate_similarity(const WorkerSet& workers, int x_samples, Rng& rng) {
  if (x_samples < 1)
    throw DomainError("estimate_similarity: need at least one probe point");
  if (workers.local.empty())
    throw DomainError("estimate_similarity: empty worker set");
  double worst = 0.0;
  for (int t = 0; t < x_samples; ++t) {
    const Vector x = ball_vector(rng, workers.d, 2.0);
    const Matrix diff =
        workers.pooled->hessian(x) - workers.local[0]->hessian(x);
    worst = std::max(worst, spectral_norm(diff));
  }
  return worst;
}

std::string DistTrace::csv_header() {
  return "round,f_gap,grad_norm,comm_rounds,inner_iters,elapsed_s";
}

std::string DistTrace::to_csv(bool wall_clock) const {
  std::ostringstream out;
  out << csv_header() << "\n";
  for (const DistTraceRow& r : rows) {
    out << r.round << ',' << format_double(r.f_gap) << ','
        << format_double(r.grad_norm) << ',' << r.comm_rounds << ','
        << r.inner_iters << ','
        << format_double(wall_clock ? r.elapsed_s : 0.0) << "\n";
  }
  return out.str();
}

void write_dist_csv_file(const DistTrace& trace, const std::string& path,
                         bool wall_clock) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DomainError("cannot open '" + tmp + "' for writing");
    out << trace.to_csv(wall_clock);
    if (!out) throw DomainError("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DomainError("cannot rename '" + tmp + "' to '" + path + "'");
}

DistTrace run_distributed(const DistConfig& cfg, const WorkerSet& workers,
                          const Vector& x0) {
  validate(cfg);
  if (static_cast<int>(workers.local.size()) != cfg.workers)
    throw DomainError("distsim: worker set does not match config");
  if (x0.size() != workers.d)
    throw DomainError("distsim: x0 has wrong dimension");

  using Clock = std::chrono::steady_clock;
  const Clock::time_point t0 = Clock::now();

  DistTrace trace;
  double sigma = cfg.sigma;
  if (cfg.sigma_is_auto()) {
    // The bound must hold uniformly and the probe is finite; pad it.
    Rng probe_rng = make_rng(cfg.seed, 2);
    sigma = 1.5 * estimate_similarity(workers, 16, probe_rng);
  }
  trace.sigma_used = sigma;
  trace.mu_rho = workers.mu_f / (workers.mu_f + 2.0 * sigma);
  trace.kappa_rho = 1.0 + 2.0 * sigma / workers.mu_f;

  const FiniteSumObjective& master = *workers.local[0];
  const FiniteSumObjective& pooled = *workers.pooled;

  // Pooled reference for the f_gap diagnostic, computed out-of-band.
  {
    SolverConfig ref_cfg;
    ref_cfg.p = 2;
    ref_cfg.H = 3.0 * pooled.meta().lipschitz[2];
    ref_cfg.eps_grad = 1e-12;
    ref_cfg.max_outer = 200;
    const Trace ref = msn_run(pooled, x0, ref_cfg);
    trace.f_star = ref.rows.back().f_value;
  }

  SolverConfig inner = cfg.inner;
  if (inner.H <= 0.0)
    inner.H = derive_inner_weight(inner, master.meta(), sigma);

  Vector y = x0;
  long long comm = 0;
  for (long long round = 1; round <= cfg.rounds_max; ++round) {
    // Gather round: the server pools local gradients at y.
    const Vector g = pooled.gradient(y);
    if (g.norm() <= cfg.eps) {
      // Terminal check; this gather produces no iterate and no row.
      trace.converged = true;
      return trace;
    }
    comm += 1;

    // Bregman step: minimize f_1 + sigma/2 ||y||^2 plus the correction
    // linear term, all local to the master.
    QuadraticComposite comp;
    comp.Q = Matrix::Identity(workers.d, workers.d) * sigma;
    comp.b = g - master.gradient(y) - sigma * y;

    Vector y_next = y;
    RunHooks hooks{[&y_next](long long, const Vector& z) { y_next = z; }};
    Trace inner_trace;
    try {
      inner_trace = msn_run(master, y, inner, &comp, &hooks);
    } catch (const Error& e) {
      throw NumericalError("distsim: master solve failed in round " +
                           std::to_string(round) + ": " + e.what());
    }
    y = y_next;
    comm += 1;  // broadcast round: workers receive y_{t+1}

    DistTraceRow row;
    row.round = round;
    row.f_gap = pooled.value(y) - trace.f_star;
    row.grad_norm = pooled.gradient(y).norm();
    row.comm_rounds = comm;
    row.inner_iters = static_cast<long long>(inner_trace.rows.size()) - 1;
    row.elapsed_s = std::chrono::duration<double>(Clock::now() - t0).count();
    trace.rows.push_back(row);

    if (row.grad_norm <= cfg.eps) {
      trace.converged = true;
      return trace;
    }
  }
  trace.converged = false;
  return trace;
}

}  // namespace tensoropt
