#pragma once

#include "tensoropt/oracle.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tensoropt {

enum class TerminationStatus { converged_grad, converged_gap, budget_exhausted };

std::string to_string(TerminationStatus s);

/* One per-iteration record.  counters is the cumulative snapshot at the end
 * of the iteration.  solves (subproblem solves this iteration) is carried
 * in memory for instrumentation but is not part of the CSV schema. */
struct TraceRow {
  long long k = 0;
  double f_value = kNaN;
  std::optional<double> f_gap;  // known only with a reference value
  double grad_norm = kNaN;
  double lambda = 0.0;
  double step_norm = 0.0;
  long long inner_iters = 0;
  CallCounters counters;
  double elapsed_s = 0.0;
  int solves = 0;  // in-memory only
};

/* Run history.  The CSV serialization uses the fixed header
 *   k,f_value,f_gap,grad_norm,lambda,step_norm,inner_iters,n_f,n_grad,n_hess,n_d3,n_comp,elapsed_s
 * with floats printed to 17 significant digits so parse(write(t)) is
 * field-exact.  The elapsed_s column is written as 0 unless wall_clock is
 * requested: run output must be bitwise reproducible for equal configs and
 * seeds, and wall time is the one field that cannot be.  Measured times
 * always remain available in memory. */
struct Trace {
  std::vector<TraceRow> rows;
  TerminationStatus status = TerminationStatus::budget_exhausted;

  // In-memory diagnostics (not serialized).
  std::vector<long long> monotonicity_violations;  // k where f increased
  std::vector<int> inner_per_solve;   // inner iterations of each subproblem solve
  std::vector<std::size_t> phase_ends;  // row counts at restart-phase boundaries

  static const char* csv_header();
  std::string to_csv(bool wall_clock = false) const;
  static Trace parse_csv(const std::string& text);

  /* Atomic write: temporary file in the same directory, then rename. */
  void write_csv_file(const std::string& path, bool wall_clock = false) const;
};

/* 17-significant-digit formatting, round-trip safe for doubles. */
std::string format_double(double v);

}  // namespace tensoropt
