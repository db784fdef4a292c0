#include "tensoropt/report.hpp"

#include "tensoropt/stochastic.hpp"

#include "json.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace tensoropt {

using ordered_json = nlohmann::ordered_json;

RateFit fit_rate(const Trace& trace, long long k_lo, long long k_hi) {
  if (k_lo < 1) throw DomainError("fit_rate: k_lo must be >= 1");
  if (k_hi < k_lo) throw DomainError("fit_rate: empty window");
  std::vector<double> xs, ys;
  for (const TraceRow& r : trace.rows) {
    if (r.k < k_lo || r.k > k_hi) continue;
    if (!r.f_gap || !(*r.f_gap > 0.0)) continue;
    xs.push_back(std::log(static_cast<double>(r.k)));
    ys.push_back(std::log(*r.f_gap));
  }
  if (xs.size() < 5)
    throw DomainError(
        "fit_rate: need at least 5 positive-gap rows in the window, have " +
        std::to_string(xs.size()));

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  RateFit fit;
  fit.k_lo = k_lo;
  fit.k_hi = k_hi;
  fit.points = static_cast<int>(xs.size());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

BoundCheck theorem_bound_check(const Trace& trace, int p, double H, double R) {
  if (p < 1) throw DomainError("theorem_bound_check: p must be >= 1");
  if (!(H > 0.0)) throw DomainError("theorem_bound_check: H must be positive");
  if (!(R > 0.0)) throw DomainError("theorem_bound_check: R must be positive");
  BoundCheck check;
  check.p = p;
  check.H = H;
  check.R = R;
  const double exponent = (3.0 * p + 1.0) / 2.0;
  const double denom = (12.0 / 5.0) * accel_rate_constant(p) * H *
                       std::pow(R, p + 1);
  for (const TraceRow& r : trace.rows) {
    if (r.k < 1 || !r.f_gap) continue;
    const double ratio =
        *r.f_gap * std::pow(static_cast<double>(r.k), exponent) / denom;
    if (!(check.worst_k > 0) || ratio > check.worst_ratio) {
      check.worst_ratio = ratio;
      check.worst_k = r.k;
    }
  }
  check.passed = check.worst_k > 0 && check.worst_ratio <= 1.0;
  return check;
}

RunSummary summarize_trace(const Trace& trace, const std::string& problem,
                           const std::string& method, const SolverConfig& cfg,
                           double R) {
  if (trace.rows.empty())
    throw DomainError("summarize_trace: trace has no rows");
  RunSummary s;
  s.problem = problem;
  s.method = method;
  s.p = cfg.p;
  s.H = cfg.H;
  s.eps = cfg.eps_grad;
  s.max_iter = cfg.max_outer;
  s.seed = cfg.seed;
  s.superfast = cfg.superfast;

  const TraceRow& last = trace.rows.back();
  s.status = to_string(trace.status);
  s.iterations = last.k;
  s.final_f = last.f_value;
  s.final_gap = last.f_gap;
  s.final_grad = last.grad_norm;
  s.totals = last.counters;
  s.elapsed_s = last.elapsed_s;

  const long long k_max = last.k;
  if (k_max >= 7) {
    const long long lo = k_max >= 15 ? 10 : 2;
    try {
      s.rate = fit_rate(trace, lo, k_max);
    } catch (const DomainError&) {
      // too few positive gaps; leave the fit absent
    }
  }
  if (is_known(R) && R > 0.0) {
    BoundCheck check = theorem_bound_check(trace, cfg.p, cfg.H, R);
    if (check.worst_k > 0) s.bound = check;
  }
  return s;
}

std::string summary_to_json(const RunSummary& s) {
  ordered_json j;
  j["problem"] = s.problem;
  j["method"] = s.method;
  j["p"] = s.p;
  j["H"] = s.H;
  j["eps"] = s.eps;
  j["max_iter"] = s.max_iter;
  j["seed"] = s.seed;
  j["superfast"] = s.superfast;
  j["status"] = s.status;
  j["iterations"] = s.iterations;
  j["final_f"] = s.final_f;
  if (s.final_gap)
    j["final_gap"] = *s.final_gap;
  else
    j["final_gap"] = nullptr;
  j["final_grad"] = s.final_grad;
  j["counters"] = {{"n_f", s.totals.n_value},
                   {"n_grad", s.totals.n_grad},
                   {"n_hess", s.totals.n_hess},
                   {"n_d3", s.totals.n_d3},
                   {"n_comp", s.totals.n_component}};
  if (s.rate) {
    j["rate_fit"] = {{"k_lo", s.rate->k_lo},
                     {"k_hi", s.rate->k_hi},
                     {"slope", s.rate->slope},
                     {"intercept", s.rate->intercept},
                     {"r_squared", s.rate->r_squared},
                     {"points", s.rate->points}};
  } else {
    j["rate_fit"] = nullptr;
  }
  if (s.bound) {
    j["bound_check"] = {{"p", s.bound->p},
                        {"H", s.bound->H},
                        {"R", s.bound->R},
                        {"worst_ratio", s.bound->worst_ratio},
                        {"worst_k", s.bound->worst_k},
                        {"passed", s.bound->passed}};
  } else {
    j["bound_check"] = nullptr;
  }
  j["elapsed_s"] = s.elapsed_s;
  return j.dump();
}

Method parse_method(const std::string& name) {
  if (name == "msn") return Method::msn;
  if (name == "basic") return Method::basic;
  if (name == "restart") return Method::restart;
  if (name == "stochastic") return Method::stochastic;
  throw DomainError("unknown method '" + name +
                    "' (expected msn, basic, restart or stochastic)");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::msn: return "msn";
    case Method::basic: return "basic";
    case Method::restart: return "restart";
    case Method::stochastic: return "stochastic";
  }
  throw DomainError("unknown method");
}

RunOutcome execute_run(const RunRequest& req) {
  BuiltProblem built = make_problem(req.spec);
  SolverConfig cfg = req.cfg;
  if (cfg.p < 1 || cfg.p > 3) throw DomainError("run: p must be in {1, 2, 3}");
  if (cfg.superfast && cfg.p != 3)
    throw DomainError("run: superfast mode applies to p = 3 only");
  if (cfg.H <= 0.0) {
    const double L = built.spec.lipschitz[static_cast<std::size_t>(cfg.p)];
    if (!is_known(L))
      throw DomainError("run: H = auto needs the constant L" +
                        std::to_string(cfg.p) +
                        ", which the problem spec does not provide");
    cfg.H = (cfg.p + 1.0) * L;
    if (!(cfg.H > 0.0))
      throw DomainError("run: H = auto resolved to 0 because L" +
                        std::to_string(cfg.p) +
                        " is 0; pass an explicit positive H");
  }

  const Vector x0 = default_start(built.spec);
  RunOutcome out;
  if (built.spec.x_star && built.spec.f_star) {
    cfg.f_star = *built.spec.f_star;
    out.R = (x0 - *built.spec.x_star).norm();
  }

  const Objective& f = *built.objective;
  switch (req.method) {
    case Method::msn:
      out.trace = msn_run(f, x0, cfg);
      break;
    case Method::basic:
      out.trace = basic_tensor_run(f, x0, cfg, {0.0, 0.0, 0.0, 0.0});
      break;
    case Method::restart: {
      if (!is_known(built.spec.sigma_r))
        throw DomainError(
            "run: problem spec is missing key 'sigma_r' required by method "
            "'restart'");
      double R0 = out.R;
      if (!is_known(R0)) {
        if (built.spec.family == Family::logistic && is_known(built.spec.mu) &&
            built.spec.mu > 0.0) {
          // The loss is nonnegative, so mu/2 ||x0 - x*||^2 <= f(x0).
          R0 = std::sqrt(2.0 * f.value(x0) / built.spec.mu) + 1.0;
        } else {
          throw DomainError(
              "run: cannot certify a start radius R0 for the restart "
              "schedule on this problem");
        }
      }
      out.trace = restarted_run(f, x0, cfg, built.spec.growth_r,
                                built.spec.sigma_r, R0, 30);
      break;
    }
    case Method::stochastic: {
      const auto* fs = dynamic_cast<const FiniteSumObjective*>(&f);
      if (!fs)
        throw CapabilityError(
            "run: method 'stochastic' needs a finite-sum problem family");
      const OracleMeta meta = fs->meta();
      std::vector<double> M, L;
      for (int i = 1; i <= cfg.p; ++i) {
        const double Mi = meta.noise[static_cast<std::size_t>(i)];
        if (!is_known(Mi))
          throw DomainError("run: no noise bound M" + std::to_string(i) +
                            " available for the stochastic planner");
        M.push_back(Mi);
      }
      if (!is_known(built.spec.mu) || !(built.spec.mu > 0.0))
        throw DomainError(
            "run: the stochastic planner needs a strong-convexity modulus to "
            "bound the level-set diameter");
      // Level sets of a nonnegative mu-strongly-convex loss have diameter
      // at most 2 sqrt(2 f(x0) / mu).
      const double D = 2.0 * std::sqrt(2.0 * f.value(x0) / built.spec.mu);
      for (int i = 0; i <= cfg.p; ++i) {
        double Li = meta.lipschitz[static_cast<std::size_t>(i)];
        if (i == 0 && !is_known(Li)) {
          // No global gradient bound exists once a ridge term is present;
          // within the start level set the loss part is bounded by M1/2 per
          // component and the ridge contributes mu * ||x||.
          Li = M[0] / 2.0 + built.spec.mu * (x0.norm() + D);
        }
        if (!is_known(Li))
          throw DomainError("run: no Lipschitz constant L" + std::to_string(i) +
                            " available for the stochastic planner");
        L.push_back(Li);
      }
      const double plan_eps = cfg.eps_gap ? *cfg.eps_gap : 1e-6;
      const double confidence = 0.1;
      BatchPlan plan = plan_batches(cfg.p, BatchSchedule::plain, M, L, cfg.H,
                                    plan_eps, D, confidence);
      std::array<double, 4> deltas{0.0, 0.0, 0.0, 0.0};
      for (int i = 1; i <= cfg.p; ++i)
        deltas[static_cast<std::size_t>(i)] =
            M[static_cast<std::size_t>(i - 1)] *
            std::sqrt(std::log(1.0 / confidence) /
                      static_cast<double>(plan.n[static_cast<std::size_t>(i - 1)]));
      out.trace = stochastic_tensor_run(*fs, x0, cfg, plan, deltas);
      break;
    }
  }

  const std::string label = req.problem_label.empty()
                                ? to_string(built.spec.family)
                                : req.problem_label;
  out.summary =
      summarize_trace(out.trace, label, to_string(req.method), cfg, out.R);
  return out;
}

namespace {

std::string trim_line(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    throw DomainError("suite: key '" + key + "' has invalid value '" + value +
                      "'");
  }
  if (used != value.size())
    throw DomainError("suite: key '" + key + "' has invalid value '" + value +
                      "'");
  return v;
}

double parse_suite_real(const std::string& key, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (value.empty() || end != begin + value.size())
    throw DomainError("suite: key '" + key + "' has invalid value '" + value +
                      "'");
  return v;
}

}  // namespace

Suite parse_suite(const std::string& text) {
  Suite suite;
  bool seed_seen = false;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const std::string stripped = trim_line(line);
    if (stripped.empty() || stripped[0] == '#') continue;

    if (stripped.rfind("suite_seed", 0) == 0) {
      const auto eq = stripped.find('=');
      if (eq == std::string::npos)
        throw DomainError("suite: malformed suite_seed line");
      if (seed_seen) throw DomainError("suite: duplicate suite_seed");
      suite.seed = parse_u64("suite_seed", trim_line(stripped.substr(eq + 1)));
      seed_seen = true;
      continue;
    }

    SuiteRow row;
    bool have_problem = false;
    std::stringstream ls(stripped);
    std::string token;
    while (ls >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos)
        throw DomainError("suite: token without '=': '" + token + "'");
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      if (key == "problem") {
        row.problem_file = value;
        have_problem = true;
      } else if (key == "method") {
        row.method = parse_method(value);
      } else if (key == "p") {
        row.p = static_cast<int>(parse_u64(key, value));
      } else if (key == "H") {
        row.H = value == "auto" ? -1.0 : parse_suite_real(key, value);
      } else if (key == "iters") {
        row.iters = static_cast<long long>(parse_u64(key, value));
      } else if (key == "eps") {
        row.eps = parse_suite_real(key, value);
      } else if (key == "seed") {
        row.seed = parse_u64(key, value);
      } else if (key == "superfast") {
        row.superfast = parse_u64(key, value) != 0;
      } else {
        throw DomainError("suite: unknown key '" + key + "'");
      }
    }
    if (!have_problem)
      throw DomainError("suite: row without required key 'problem'");
    suite.rows.push_back(std::move(row));
  }
  return suite;
}

Suite load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("suite: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_suite(buf.str());
}

SuiteResult run_suite(const Suite& suite, int threads) {
  if (threads <= 0) {
    threads = 1;
    if (const char* env = std::getenv("TENSOROPT_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        throw DomainError("TENSOROPT_THREADS is not an integer");
      }
    }
    threads = std::max(1, std::min(threads, 16));
  }

  SuiteResult result;
  result.rows.resize(suite.rows.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= suite.rows.size()) return;
      const SuiteRow& row = suite.rows[i];
      SuiteRowResult& out = result.rows[i];
      out.index = i;
      try {
        RunRequest req;
        req.spec = load_problem_spec(row.problem_file);
        req.method = row.method;
        req.problem_label = row.problem_file;
        req.cfg.p = row.p;
        req.cfg.H = row.H > 0.0 ? row.H : 0.0;
        req.cfg.max_outer = row.iters;
        req.cfg.eps_grad = row.eps;
        req.cfg.superfast = row.superfast;
        req.cfg.seed = row.seed
                           ? *row.seed
                           : suite.seed ^ (0x9e3779b97f4a7c15ull * (i + 1));
        out.summary = execute_run(req).summary;
        out.ok = true;
      } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
      }
    }
  };

  if (threads == 1 || suite.rows.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n = std::min<int>(threads, static_cast<int>(suite.rows.size()));
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  ordered_json arr = ordered_json::array();
  for (const SuiteRowResult& r : result.rows) {
    if (r.ok) {
      arr.push_back(ordered_json::parse(summary_to_json(r.summary)));
    } else {
      result.any_error = true;
      ordered_json err;
      err["error"] = r.error;
      err["row"] = r.index;
      arr.push_back(err);
    }
  }
  result.json = arr.dump(2);
  return result;
}

}  // namespace tensoropt
