#include "tensoropt/stochastic.hpp"

#include "tensoropt/model.hpp"
#include "tensoropt/subsolve.hpp"

#include <chrono>
#include <cmath>

namespace tensoropt {

FiniteSumObjective::FiniteSumObjective(long long components) : m_(components) {
  if (m_ < 1)
    throw DomainError("finite sum: component count must be >= 1");
  all_.resize(static_cast<std::size_t>(m_));
  for (long long j = 0; j < m_; ++j) all_[static_cast<std::size_t>(j)] = j;
}

Matrix FiniteSumObjective::component_hessian(long long, const Vector&) const {
  throw CapabilityError("finite sum: components do not provide second derivatives");
}

Vector FiniteSumObjective::component_d3_apply(long long, const Vector&,
                                              const Vector&) const {
  throw CapabilityError("finite sum: components do not provide third derivatives");
}

double FiniteSumObjective::average_value(const std::vector<long long>& idx,
                                         const Vector& x) const {
  if (idx.empty()) throw DomainError("finite sum: empty index set");
  double acc = 0.0;
  for (long long j : idx) acc += component_value(j, x);
  return acc / static_cast<double>(idx.size());
}

Vector FiniteSumObjective::average_gradient(const std::vector<long long>& idx,
                                            const Vector& x) const {
  if (idx.empty()) throw DomainError("finite sum: empty index set");
  Vector acc = Vector::Zero(x.size());
  for (long long j : idx) acc += component_gradient(j, x);
  return acc / static_cast<double>(idx.size());
}

Matrix FiniteSumObjective::average_hessian(const std::vector<long long>& idx,
                                           const Vector& x) const {
  if (idx.empty()) throw DomainError("finite sum: empty index set");
  Matrix acc = Matrix::Zero(x.size(), x.size());
  for (long long j : idx) acc += component_hessian(j, x);
  return acc / static_cast<double>(idx.size());
}

Vector FiniteSumObjective::average_d3_apply(const std::vector<long long>& idx,
                                            const Vector& x,
                                            const Vector& h) const {
  if (idx.empty()) throw DomainError("finite sum: empty index set");
  Vector acc = Vector::Zero(x.size());
  for (long long j : idx) acc += component_d3_apply(j, x, h);
  return acc / static_cast<double>(idx.size());
}

double FiniteSumObjective::value(const Vector& x) const {
  return average_value(all_, x);
}
Vector FiniteSumObjective::gradient(const Vector& x) const {
  return average_gradient(all_, x);
}
Matrix FiniteSumObjective::hessian(const Vector& x) const {
  return average_hessian(all_, x);
}
Vector FiniteSumObjective::d3_apply(const Vector& x, const Vector& h) const {
  return average_d3_apply(all_, x, h);
}

namespace {

std::vector<long long> draw_batch(long long n, long long m, Rng& rng) {
  if (n >= m) return {};  // sentinel: caller uses the full index set
  std::vector<long long> idx(static_cast<std::size_t>(n));
  std::uniform_int_distribution<long long> pick(0, m - 1);
  for (auto& j : idx) j = pick(rng);
  return idx;
}

}  // namespace

DerivativeBundle sample_derivatives(CountingOracle& oracle, const Vector& x,
                                    int order,
                                    const std::array<long long, 3>& batch_sizes,
                                    Rng& rng) {
  if (order < 1 || order > 3)
    throw DomainError("sample_derivatives: order must be in {1, 2, 3}");
  const auto* fs = dynamic_cast<const FiniteSumObjective*>(&oracle.objective());
  if (!fs)
    throw CapabilityError("sample_derivatives: objective is not a finite sum");
  if (fs->order_available() < order)
    throw CapabilityError("sample_derivatives: components do not supply order " +
                          std::to_string(order));
  if (x.size() != fs->dimension())
    throw DomainError("sample_derivatives: point has wrong dimension");
  for (int i = 0; i < order; ++i)
    if (batch_sizes[static_cast<std::size_t>(i)] < 1)
      throw DomainError("sample_derivatives: batch size for order " +
                        std::to_string(i + 1) + " must be >= 1");

  const long long m = fs->components();
  // Fresh, independent index sets per derivative order, drawn in order.
  std::array<std::vector<long long>, 3> sets;
  for (int i = 0; i < order; ++i)
    sets[static_cast<std::size_t>(i)] =
        draw_batch(batch_sizes[static_cast<std::size_t>(i)], m, rng);
  auto set_of = [&](int i) -> const std::vector<long long>& {
    const auto& s = sets[static_cast<std::size_t>(i - 1)];
    return s.empty() ? fs->all_indices() : s;
  };

  DerivativeBundle b;
  b.point = x;
  b.order = order;
  b.provenance = Provenance::sampled;
  b.value = oracle.value(x);  // exact; charged through the wrapper

  b.gradient = fs->average_gradient(set_of(1), x);
  oracle.charge({0, 1, 0, 0,
                 static_cast<long long>(set_of(1).size())});
  if (order >= 2) {
    b.hessian = fs->average_hessian(set_of(2), x);
    oracle.charge({0, 0, 1, 0,
                   static_cast<long long>(set_of(2).size())});
  }
  if (order >= 3) {
    std::vector<long long> s3 = set_of(3);
    CountingOracle* counting = &oracle;
    Vector x0 = x;
    b.d3_action = [fs, counting, s3 = std::move(s3),
                   x0 = std::move(x0)](const Vector& h) {
      counting->charge({0, 0, 0, 1, static_cast<long long>(s3.size())});
      return fs->average_d3_apply(s3, x0, h);
    };
  }
  return b;
}

BatchPlan plan_batches(int p, BatchSchedule schedule,
                       const std::vector<double>& M,
                       const std::vector<double>& L, double H, double eps,
                       double radius, double confidence) {
  if (p < 1 || p > 3) throw DomainError("plan_batches: p must be in {1, 2, 3}");
  if (M.size() < static_cast<std::size_t>(p))
    throw DomainError("plan_batches: need noise bounds M_1..M_p");
  if (L.size() < static_cast<std::size_t>(p) + 1)
    throw DomainError("plan_batches: need Lipschitz constants L_0..L_p");
  if (!(H > 0.0)) throw DomainError("plan_batches: H must be positive");
  if (!(eps > 0.0)) throw DomainError("plan_batches: eps must be positive");
  if (!(radius > 0.0)) throw DomainError("plan_batches: radius must be positive");
  if (!(confidence > 0.0) || confidence > 1.0)
    throw DomainError("plan_batches: confidence must be in (0, 1]");
  for (int i = 0; i < p; ++i)
    if (!(M[static_cast<std::size_t>(i)] >= 0.0))
      throw DomainError("plan_batches: noise bounds must be >= 0");
  for (int i = 0; i <= p; ++i)
    if (!(L[static_cast<std::size_t>(i)] >= 0.0))
      throw DomainError("plan_batches: Lipschitz constants must be >= 0");

  BatchPlan plan;
  plan.p = p;
  plan.accelerated_schedule = (schedule == BatchSchedule::accelerated);
  plan.noise.assign(M.begin(), M.begin() + p);
  plan.lipschitz.assign(L.begin(), L.begin() + p + 1);
  plan.H = H;
  plan.eps = eps;
  plan.radius = radius;
  plan.confidence = confidence;

  const double log_term = std::log(1.0 / confidence);
  const double accuracy = eps / radius;
  const double denom_base = L[static_cast<std::size_t>(p)] + p * H;
  for (int i = 1; i <= p; ++i) {
    const double pair =
        M[static_cast<std::size_t>(i - 1)] + L[static_cast<std::size_t>(i - 1)];
    double denom_exp, eps_exp;
    if (plan.accelerated_schedule) {
      denom_exp = (i == 1) ? 0.0 : 2.0 * i / (p + 1.0);
      eps_exp = (i == 1) ? -2.0 : -2.0 * (p - i + 1) / (p + 1.0);
    } else {
      denom_exp = 2.0 * (i - 1) / p;
      eps_exp = -2.0 * (p - i + 1) / p;
    }
    const double raw = pair * pair / std::pow(denom_base, denom_exp) *
                       std::pow(accuracy, eps_exp) * log_term;
    plan.raw.push_back(raw);
    plan.eps_exponent.push_back(eps_exp);
    plan.n.push_back(
        std::max<long long>(1, static_cast<long long>(std::ceil(raw))));
  }
  return plan;
}

Trace stochastic_tensor_run(const FiniteSumObjective& f, const Vector& x0,
                            const SolverConfig& cfg, const BatchPlan& plan,
                            const std::array<double, 4>& deltas,
                            const RunHooks* hooks) {
  if (cfg.p < 1 || cfg.p > 3)
    throw DomainError("solver: p must be in {1, 2, 3}");
  if (!(cfg.H > 0.0)) throw DomainError("solver: H must be positive");
  if (!(cfg.eps_grad > 0.0))
    throw DomainError("solver: eps_grad must be positive");
  if (cfg.max_outer < 0) throw DomainError("solver: max_outer must be >= 0");
  if (cfg.eps_gap && !cfg.f_star)
    throw DomainError("solver: eps_gap requires f_star");
  if (x0.size() != f.dimension())
    throw DomainError("solver: x0 has wrong dimension");
  if (plan.n.size() < static_cast<std::size_t>(cfg.p))
    throw DomainError("solver: batch plan is missing sizes for order " +
                      std::to_string(cfg.p));

  using Clock = std::chrono::steady_clock;
  const Clock::time_point t0 = Clock::now();
  CountingOracle oracle(f);
  Rng rng = make_rng(cfg.seed, 1);
  std::array<long long, 3> batches{1, 1, 1};
  for (int i = 0; i < cfg.p; ++i)
    batches[static_cast<std::size_t>(i)] = plan.n[static_cast<std::size_t>(i)];

  // The subproblem cutoff mirrors the deterministic driver so the full-batch
  // reduction is exact.
  SubsolveOptions sopts = cfg.subsolve;
  sopts.tol_abs = std::min(sopts.tol_abs, 0.05 * cfg.eps_grad);

  GradCallback grad_cb = [&oracle](const Vector& z) {
    return oracle.gradient(z);
  };

  Trace trace;
  auto push_row = [&](long long k, double fv, double gn, double sn,
                      long long inner, int solves) {
    TraceRow r;
    r.k = k;
    r.f_value = fv;
    if (cfg.f_star) r.f_gap = fv - *cfg.f_star;
    r.grad_norm = gn;
    r.lambda = 0.0;
    r.step_norm = sn;
    r.inner_iters = inner;
    r.counters = oracle.counters();
    r.elapsed_s = std::chrono::duration<double>(Clock::now() - t0).count();
    r.solves = solves;
    trace.rows.push_back(std::move(r));
  };
  auto hit_grad = [&](double gn) { return gn <= cfg.eps_grad; };
  auto hit_gap = [&](double fv) {
    return cfg.eps_gap && cfg.f_star && fv - *cfg.f_star <= *cfg.eps_gap;
  };

  const double f0 = oracle.value(x0);
  const double gn0 = oracle.gradient(x0).norm();
  push_row(0, f0, gn0, 0.0, 0, 0);
  if (hit_grad(gn0)) {
    trace.status = TerminationStatus::converged_grad;
    return trace;
  }
  if (hit_gap(f0)) {
    trace.status = TerminationStatus::converged_gap;
    return trace;
  }

  Vector x = x0;
  double fx = f0;
  for (long long t = 1; t <= cfg.max_outer; ++t) {
    DerivativeBundle b = sample_derivatives(oracle, x, cfg.p, batches, rng);
    ModelState m = build_model(b, cfg.p, cfg.H, deltas, nullptr);
    SubsolveResult res =
        solve_model(m, sopts, cfg.p == 3 ? grad_cb : nullptr);
    trace.inner_per_solve.push_back(res.inner_iterations);

    const Vector y = x + res.step;
    const double fy = oracle.value(y);
    const double gn = oracle.gradient(y).norm();
    push_row(t, fy, gn, res.step.norm(), res.inner_iterations, 1);
    if (fy - fx > 1e-12 * std::max(1.0, std::abs(fx)))
      trace.monotonicity_violations.push_back(t);
    x = y;
    fx = fy;
    if (hooks && hooks->on_iterate) hooks->on_iterate(t, x);
    if (hit_grad(gn)) {
      trace.status = TerminationStatus::converged_grad;
      return trace;
    }
    if (hit_gap(fy)) {
      trace.status = TerminationStatus::converged_gap;
      return trace;
    }
  }
  trace.status = TerminationStatus::budget_exhausted;
  return trace;
}

}  // namespace tensoropt
