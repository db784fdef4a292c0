#pragma once

#include "tensoropt/driver.hpp"
#include "tensoropt/problems.hpp"
#include "tensoropt/trace.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tensoropt {

/* Ordinary least squares of log f_gap against log k. */
struct RateFit {
  long long k_lo = 0;
  long long k_hi = 0;
  double slope = kNaN;
  double intercept = kNaN;
  double r_squared = kNaN;
  int points = 0;
};

/* Fits rows with k in [k_lo, k_hi] and f_gap > 0; at least 5 such rows are
 * required (DomainError otherwise), as is k_lo >= 1.  The slope estimates
 * the empirical decay exponent; the theory is one-sided, so callers should
 * assert bounds, not equality. */
RateFit fit_rate(const Trace& trace, long long k_lo, long long k_hi);

/* Worst-case-bound audit: the largest over k >= 1 of
 *   f_gap(k) * k^((3p+1)/2) / ((12/5) c_p H R^(p+1)),
 * where c_p is the accelerated rate constant and 12/5 the slack of
 * tolerance-level subproblem solves.  The run satisfies the bound when the
 * ratio stays <= 1. */
struct BoundCheck {
  int p = 0;
  double H = kNaN;
  double R = kNaN;
  double worst_ratio = kNaN;
  long long worst_k = 0;
  bool passed = false;
};

BoundCheck theorem_bound_check(const Trace& trace, int p, double H, double R);

/* Everything a benchmark row reports.  All derived fields (finals, totals,
 * rate fit, bound check) are functions of the trace rows alone, so a
 * summary can be recomputed from a written CSV. */
struct RunSummary {
  std::string problem;
  std::string method;
  int p = 0;
  double H = kNaN;
  double eps = kNaN;
  long long max_iter = 0;
  std::uint64_t seed = 0;
  bool superfast = false;

  std::string status;
  long long iterations = 0;  // trace rows minus the start row
  double final_f = kNaN;
  std::optional<double> final_gap;
  double final_grad = kNaN;
  CallCounters totals;
  std::optional<RateFit> rate;
  std::optional<BoundCheck> bound;
  double elapsed_s = 0.0;  // in-memory timing; not recoverable from CSV
};

/* Derives the reportable fields from a trace: finals and counter totals
 * from the last row, a rate fit over [10, k_max] (falling back to [2,
 * k_max]) when enough positive gaps exist, and the bound check when R is
 * known.  Works identically on parsed CSV traces. */
RunSummary summarize_trace(const Trace& trace, const std::string& problem,
                           const std::string& method, const SolverConfig& cfg,
                           double R);

/* Single JSON object (one line) for a summary; nulls for absent gap, rate
 * or bound fields.  Key order is fixed. */
std::string summary_to_json(const RunSummary& summary);

enum class Method { msn, basic, restart, stochastic };
Method parse_method(const std::string& name);
std::string to_string(Method method);

/* One solver execution: problem construction, auto-H resolution, reference
 * lookup, method dispatch and summary assembly. */
struct RunRequest {
  ProblemSpec spec;
  Method method = Method::msn;
  SolverConfig cfg;        // cfg.H <= 0 requests the default (p+1) L_p rule
  bool wall_clock = false; // propagate measured times into CSV output
  std::string problem_label;  // echo string for the summary
};

struct RunOutcome {
  Trace trace;
  RunSummary summary;
  double R = kNaN;  // start-to-reference distance when a reference exists
};

/* Dispatches a request to the matching driver.  Auto H uses (p+1) L_p from
 * the resolved spec, raising DomainError naming the missing constant.  Restart requires sigma_r in the spec (the error names
 * the key) and a certifiable start radius.  The stochastic method requires
 * a finite-sum family; batches come from the plain planner at the run's
 * accuracy and the model slacks from the noise bounds M_i sqrt(ln(1/0.1)
 * / n_i). */
RunOutcome execute_run(const RunRequest& req);

/* Benchmark suites: line-oriented text, `#` comments, one optional
 * `suite_seed = N` line, then one row per line of whitespace-separated
 * key=value tokens: problem=<spec-path> [method=] [p=] [H=<float|auto>]
 * [iters=] [eps=] [seed=] [superfast=0|1].  Unknown keys raise DomainError
 * naming the key. */
struct SuiteRow {
  std::string problem_file;
  Method method = Method::msn;
  int p = 2;
  double H = -1.0;  // < 0 means auto
  long long iters = 100;
  double eps = 1e-8;
  std::optional<std::uint64_t> seed;  // default derived from suite seed
  bool superfast = false;
};

struct Suite {
  std::uint64_t seed = 0;
  std::vector<SuiteRow> rows;
};

Suite parse_suite(const std::string& text);
Suite load_suite(const std::string& path);

struct SuiteRowResult {
  std::size_t index = 0;
  bool ok = false;
  std::string error;  // set when !ok
  RunSummary summary; // set when ok
};

struct SuiteResult {
  std::vector<SuiteRowResult> rows;  // in suite order
  bool any_error = false;
  std::string json;  // JSON array, one element per row
};

/* Runs every row (failures are recorded and the suite continues).  Rows
 * run on up to `threads` workers (0 = honor TENSOROPT_THREADS, default 1);
 * results and row seeds are deterministic regardless of scheduling: row i
 * without an explicit seed gets seed derived from (suite seed, i). */
SuiteResult run_suite(const Suite& suite, int threads = 0);

}  // namespace tensoropt
