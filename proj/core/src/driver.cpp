#include "tensoropt/driver.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace tensoropt {

namespace {

using Clock = std::chrono::steady_clock;

struct Ctx {
  CountingOracle& oracle;
  const QuadraticComposite* comp;
  const SolverConfig& cfg;
  Clock::time_point t0 = Clock::now();
  int doublings = 0;

  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }
  double value(const Vector& z) {
    double v = oracle.value(z);
    if (comp) v += comp->value(z);
    return v;
  }
  Vector grad(const Vector& z) {
    Vector g = oracle.gradient(z);
    if (comp) g += comp->grad(z);
    return g;
  }
  GradCallback grad_cb() {
    return [this](const Vector& z) { return grad(z); };
  }
};

void validate_config(const Objective& f, const SolverConfig& cfg,
                     const Vector& x0) {
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
  const int need = (cfg.p == 3 && cfg.superfast) ? 2 : cfg.p;
  if (f.order_available() < need)
    throw CapabilityError("solver: oracle provides order " +
                          std::to_string(f.order_available()) +
                          ", need " + std::to_string(need));
}

/* Subproblem tolerances: the absolute cutoff is tied to the outer gradient
 * target so terminal subsolves cannot stall on the relative criterion. */
SubsolveOptions effective_subsolve(const SolverConfig& cfg) {
  SubsolveOptions o = cfg.subsolve;
  o.tol_abs = std::min(o.tol_abs, 0.05 * cfg.eps_grad);
  return o;
}

TraceRow make_row(Ctx& ctx, long long k, double fv, double gn, double lambda,
                  double sn, long long inner, int solves) {
  TraceRow r;
  r.k = k;
  r.f_value = fv;
  if (ctx.cfg.f_star) r.f_gap = fv - *ctx.cfg.f_star;
  r.grad_norm = gn;
  r.lambda = lambda;
  r.step_norm = sn;
  r.inner_iters = inner;
  r.counters = ctx.oracle.counters();
  r.elapsed_s = ctx.elapsed();
  r.solves = solves;
  return r;
}

bool hit_grad(const Ctx& ctx, double gn) { return gn <= ctx.cfg.eps_grad; }
bool hit_gap(const Ctx& ctx, double fv) {
  return ctx.cfg.eps_gap && ctx.cfg.f_star &&
         fv - *ctx.cfg.f_star <= *ctx.cfg.eps_gap;
}

struct Trial {
  double lambda = 0.0;
  double weight = 0.0;
  double phi = 0.0;
  Vector x_tilde;
  std::shared_ptr<const ModelState> model;
  SubsolveResult sub;
  bool stationary = false;
};

Trial try_lambda(Ctx& ctx, double H, const MsnState& st, double lambda,
                 const SubsolveOptions& sopts) {
  Trial t;
  t.lambda = lambda;
  const double A = st.weight_sum;
  t.weight = 0.5 * (lambda + std::sqrt(lambda * lambda + 4.0 * lambda * A));
  const double Anew = A + t.weight;
  t.x_tilde = (A / Anew) * st.y + (t.weight / Anew) * st.x;

  const bool fd = ctx.cfg.superfast && ctx.cfg.p == 3;
  DerivativeBundle b =
      eval_bundle(ctx.oracle, t.x_tilde, ctx.cfg.p, fd, ctx.cfg.fd_tau);
  auto m = std::make_shared<ModelState>(
      build_model(b, ctx.cfg.p, H, {0, 0, 0, 0}, ctx.comp));
  t.model = m;
  if (m->g0.norm() <= ctx.cfg.eps_grad) {
    // The coupled point is already stationary for F; the step would be
    // (near) zero and the run can stop here.
    t.stationary = true;
    return t;
  }
  t.sub = solve_model(*m, sopts, ctx.cfg.p == 3 ? ctx.grad_cb() : nullptr);
  t.phi = lambda * H * std::pow(t.sub.step.norm(), ctx.cfg.p - 1) /
          factorial(ctx.cfg.p);
  return t;
}

LambdaSearchResult search_impl(Ctx& ctx, double H, const MsnState& st) {
  const SubsolveOptions sopts = effective_subsolve(ctx.cfg);
  const double window_lo = 0.5;
  const double window_hi = static_cast<double>(ctx.cfg.p) / (ctx.cfg.p + 1);

  LambdaSearchResult out;
  auto record = [&out](const Trial& t) {
    ++out.solves;
    out.inner_total += t.sub.inner_iterations;
    out.inner_each.push_back(t.sub.inner_iterations);
  };
  auto accept = [&out](Trial&& t) {
    out.lambda = t.lambda;
    out.weight = t.weight;
    out.phi = t.phi;
    out.x_tilde = std::move(t.x_tilde);
    out.y = out.x_tilde + t.sub.step;
    out.model = std::move(t.model);
    out.sub = std::move(t.sub);
  };

  if (ctx.cfg.p == 1) {
    // ||s||^(p-1) = 1, so the window pins lambda = p!/(2H) exactly.
    Trial t = try_lambda(ctx, H, st, 1.0 / (2.0 * H), sopts);
    if (t.stationary) {
      out.stationary = true;
      out.lambda = t.lambda;
      out.x_tilde = t.x_tilde;
      out.y = out.x_tilde;
      return out;
    }
    record(t);
    accept(std::move(t));
    return out;
  }

  double lambda = st.lambda_prev > 0.0 ? st.lambda_prev : 1.0;
  double lam_lo = 0.0, lam_hi = 0.0;
  bool have_lo = false, have_hi = false;
  std::ostringstream hist;

  while (out.solves < ctx.cfg.lambda_max_trials) {
    Trial t = try_lambda(ctx, H, st, lambda, sopts);
    if (t.stationary) {
      out.stationary = true;
      out.lambda = lambda;
      out.x_tilde = t.x_tilde;
      out.y = out.x_tilde;
      return out;
    }
    record(t);
    hist << " (" << format_double(lambda) << ", " << format_double(t.phi)
         << ")";
    if (t.phi < window_lo) {
      lam_lo = lambda;
      have_lo = true;
    } else if (t.phi > window_hi) {
      lam_hi = lambda;
      have_hi = true;
    } else {
      accept(std::move(t));
      return out;
    }
    if (have_lo && have_hi)
      lambda = std::sqrt(lam_lo * lam_hi);  // geometric bisection
    else if (have_lo)
      lambda = lam_lo * 2.0;  // expand toward larger steps
    else
      lambda = lam_hi / 2.0;
  }
  throw BracketFailure(
      "lambda search exhausted " + std::to_string(ctx.cfg.lambda_max_trials) +
      " subproblem solves; (lambda, phi) history:" + hist.str());
}

struct PhaseResult {
  TerminationStatus status = TerminationStatus::budget_exhausted;
  bool terminated = false;
  double H = 0.0;
};

/* Runs up to `iters` accelerated iterations, appending rows k_base+1, ...
 * Mutates st in place; applies the H-doubling safeguard for exact models. */
PhaseResult msn_phase(Ctx& ctx, MsnState& st, double H, long long iters,
                      Trace& trace, const RunHooks* hooks) {
  for (long long i = 1; i <= iters; ++i) {
    const long long k = st.k + 1;
    int solves_this_iter = 0;
    long long inner_this_iter = 0;
    for (;;) {
      LambdaSearchResult ls = search_impl(ctx, H, st);
      solves_this_iter += ls.solves;
      inner_this_iter += ls.inner_total;
      trace.inner_per_solve.insert(trace.inner_per_solve.end(),
                                   ls.inner_each.begin(), ls.inner_each.end());
      if (ls.stationary) {
        const double fv = ctx.value(ls.x_tilde);
        const double gn = ctx.grad(ls.x_tilde).norm();
        st.y = ls.x_tilde;
        st.x = ls.x_tilde;
        st.k = k;
        trace.rows.push_back(make_row(ctx, k, fv, gn, 0.0, 0.0,
                                      inner_this_iter, solves_this_iter));
        if (hooks && hooks->on_iterate) hooks->on_iterate(k, st.y);
        return {TerminationStatus::converged_grad, true, H};
      }

      const double fy = ctx.value(ls.y);
      if (ctx.cfg.safeguard_doubling &&
          ls.model->provenance == Provenance::exact) {
        const double mv = model_value(*ls.model, ls.sub.step);
        if (fy > mv + 1e-9 * std::max(1.0, std::abs(mv))) {
          if (++ctx.doublings > ctx.cfg.safeguard_max_doublings)
            throw NumericalError(
                "safeguard: H doubled " + std::to_string(ctx.doublings - 1) +
                " times without restoring the model upper bound");
          H *= 2.0;
          continue;  // retry this iteration with the stiffer model
        }
      }

      const Vector gy = ctx.grad(ls.y);
      st.x -= ls.weight * gy;
      st.y = ls.y;
      st.weight_sum += ls.weight;
      st.lambda_prev = ls.lambda;
      st.k = k;
      const double gn = gy.norm();
      trace.rows.push_back(make_row(ctx, k, fy, gn, ls.lambda,
                                    ls.sub.step.norm(), inner_this_iter,
                                    solves_this_iter));
      if (hooks && hooks->on_iterate) hooks->on_iterate(k, st.y);
      if (hit_grad(ctx, gn)) return {TerminationStatus::converged_grad, true, H};
      if (hit_gap(ctx, fy)) return {TerminationStatus::converged_gap, true, H};
      break;
    }
  }
  return {TerminationStatus::budget_exhausted, false, H};
}

/* Emits row 0 for the start point; returns true when the run is already
 * finished there. */
bool emit_start_row(Ctx& ctx, const Vector& x0, Trace& trace) {
  const double f0 = ctx.value(x0);
  const double gn = ctx.grad(x0).norm();
  trace.rows.push_back(make_row(ctx, 0, f0, gn, 0.0, 0.0, 0, 0));
  if (hit_grad(ctx, gn)) {
    trace.status = TerminationStatus::converged_grad;
    return true;
  }
  if (hit_gap(ctx, f0)) {
    trace.status = TerminationStatus::converged_gap;
    return true;
  }
  return false;
}

}  // namespace

LambdaSearchResult lambda_bracket_search(CountingOracle& oracle,
                                         const QuadraticComposite* composite,
                                         const SolverConfig& cfg, double H,
                                         const MsnState& st) {
  Ctx ctx{oracle, composite, cfg};
  return search_impl(ctx, H, st);
}

double accel_rate_constant(int p) {
  if (p < 1) throw DomainError("accel_rate_constant: p must be >= 1");
  return std::pow(2.0, p - 1) * std::pow(p + 1.0, (3.0 * p + 1.0) / 2.0) /
         factorial(p);
}

Trace msn_run(const Objective& f, const Vector& x0, const SolverConfig& cfg,
              const QuadraticComposite* composite, const RunHooks* hooks) {
  validate_config(f, cfg, x0);
  CountingOracle oracle(f);
  Ctx ctx{oracle, composite, cfg};
  Trace trace;
  if (emit_start_row(ctx, x0, trace)) return trace;

  MsnState st;
  st.x = x0;
  st.y = x0;
  PhaseResult res = msn_phase(ctx, st, cfg.H, cfg.max_outer, trace, hooks);
  trace.status = res.terminated ? res.status : TerminationStatus::budget_exhausted;
  return trace;
}

std::vector<long long> restart_schedule(int p, int r, double sigma_r, double H,
                                        double R0, int K) {
  if (p < 1 || p > 3) throw DomainError("restart_schedule: p must be in {1, 2, 3}");
  if (r < 2 || r > p + 1)
    throw DomainError("restart_schedule: growth order r must be in [2, p + 1]");
  if (!(sigma_r > 0.0))
    throw DomainError("restart_schedule: sigma_r must be positive");
  if (!(H > 0.0)) throw DomainError("restart_schedule: H must be positive");
  if (!(R0 > 0.0)) throw DomainError("restart_schedule: R0 must be positive");
  if (K < 0) throw DomainError("restart_schedule: K must be >= 0");

  const double cp = accel_rate_constant(p);
  std::vector<long long> N(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const double Rk = R0 * std::pow(2.0, -k);
    const double base =
        r * cp * H * std::pow(2.0, r) * std::pow(Rk, p + 1 - r) / sigma_r;
    const double raw = std::pow(base, 2.0 / (3.0 * p + 1.0));
    N[static_cast<std::size_t>(k)] =
        std::max<long long>(1, static_cast<long long>(std::ceil(raw)));
  }
  return N;
}

Trace restarted_run(const Objective& f, const Vector& x0,
                    const SolverConfig& cfg, int r, double sigma_r, double R0,
                    int K, const QuadraticComposite* composite,
                    const RunHooks* hooks) {
  validate_config(f, cfg, x0);
  const std::vector<long long> schedule =
      restart_schedule(cfg.p, r, sigma_r, cfg.H, R0, K);

  CountingOracle oracle(f);
  Ctx ctx{oracle, composite, cfg};
  Trace trace;
  if (emit_start_row(ctx, x0, trace)) return trace;

  MsnState st;
  st.x = x0;
  st.y = x0;
  double H = cfg.H;
  for (long long phase_len : schedule) {
    PhaseResult res = msn_phase(ctx, st, H, phase_len, trace, hooks);
    H = res.H;
    trace.phase_ends.push_back(trace.rows.size());
    if (res.terminated) {
      trace.status = res.status;
      return trace;
    }
    // Restart: drop the momentum state, keep the iterate and the
    // warm-started lambda.
    st.x = st.y;
    st.weight_sum = 0.0;
  }
  trace.status = TerminationStatus::budget_exhausted;
  return trace;
}

Trace basic_tensor_run(const Objective& f, const Vector& x0,
                       const SolverConfig& cfg,
                       const std::array<double, 4>& deltas,
                       const QuadraticComposite* composite,
                       const RunHooks* hooks) {
  validate_config(f, cfg, x0);
  CountingOracle oracle(f);
  Ctx ctx{oracle, composite, cfg};
  const SubsolveOptions sopts = effective_subsolve(cfg);
  Trace trace;
  if (emit_start_row(ctx, x0, trace)) return trace;

  Vector x = x0;
  double fx = trace.rows.back().f_value;
  double H = cfg.H;
  for (long long t = 1; t <= cfg.max_outer; ++t) {
    int solves_this_iter = 0;
    for (;;) {
      const bool fd = cfg.superfast && cfg.p == 3;
      DerivativeBundle b = eval_bundle(oracle, x, cfg.p, fd, cfg.fd_tau);
      ModelState m = build_model(b, cfg.p, H, deltas, composite);
      SubsolveResult res =
          solve_model(m, sopts, cfg.p == 3 ? ctx.grad_cb() : nullptr);
      ++solves_this_iter;
      trace.inner_per_solve.push_back(res.inner_iterations);

      const Vector y = x + res.step;
      const double fy = ctx.value(y);
      if (cfg.safeguard_doubling && m.provenance == Provenance::exact) {
        const double mv = model_value(m, res.step);
        if (fy > mv + 1e-9 * std::max(1.0, std::abs(mv))) {
          if (++ctx.doublings > cfg.safeguard_max_doublings)
            throw NumericalError(
                "safeguard: H doubled " + std::to_string(ctx.doublings - 1) +
                " times without restoring the model upper bound");
          H *= 2.0;
          continue;
        }
      }

      const double gn = ctx.grad(y).norm();
      trace.rows.push_back(make_row(ctx, t, fy, gn, 0.0, res.step.norm(),
                                    res.inner_iterations, solves_this_iter));
      if (fy - fx > 1e-12 * std::max(1.0, std::abs(fx)))
        trace.monotonicity_violations.push_back(t);
      x = y;
      fx = fy;
      if (hooks && hooks->on_iterate) hooks->on_iterate(t, x);
      if (hit_grad(ctx, gn)) {
        trace.status = TerminationStatus::converged_grad;
        return trace;
      }
      if (hit_gap(ctx, fy)) {
        trace.status = TerminationStatus::converged_gap;
        return trace;
      }
      break;
    }
  }
  trace.status = TerminationStatus::budget_exhausted;
  return trace;
}

}  // namespace tensoropt
