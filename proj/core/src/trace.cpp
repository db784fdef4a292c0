#include "tensoropt/trace.hpp"

#include "tensoropt/errors.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tensoropt {

std::string to_string(TerminationStatus s) {
  switch (s) {
    case TerminationStatus::converged_grad:
      return "converged_grad";
    case TerminationStatus::converged_gap:
      return "converged_gap";
    case TerminationStatus::budget_exhausted:
      return "budget_exhausted";
  }
  return "unknown";
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* Trace::csv_header() {
  return "k,f_value,f_gap,grad_norm,lambda,step_norm,inner_iters,"
         "n_f,n_grad,n_hess,n_d3,n_comp,elapsed_s";
}

std::string Trace::to_csv(bool wall_clock) const {
  std::ostringstream out;
  out << csv_header() << '\n';
  for (const TraceRow& r : rows) {
    out << r.k << ',' << format_double(r.f_value) << ',';
    if (r.f_gap) out << format_double(*r.f_gap);
    out << ',' << format_double(r.grad_norm) << ',' << format_double(r.lambda)
        << ',' << format_double(r.step_norm) << ',' << r.inner_iters << ','
        << r.counters.n_value << ',' << r.counters.n_grad << ','
        << r.counters.n_hess << ',' << r.counters.n_d3 << ','
        << r.counters.n_component << ','
        << format_double(wall_clock ? r.elapsed_s : 0.0) << '\n';
  }
  return out.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const char* field) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw DomainError(std::string("trace CSV: bad ") + field + " value '" + s +
                      "'");
  return v;
}

long long parse_int(const std::string& s, const char* field) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw DomainError(std::string("trace CSV: bad ") + field + " value '" + s +
                      "'");
  return v;
}

}  // namespace

Trace Trace::parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DomainError("trace CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header())
    throw DomainError("trace CSV: unexpected header '" + line + "'");

  Trace t;
  long long prev_k = -1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 13)
      throw DomainError("trace CSV: expected 13 fields, got " +
                        std::to_string(f.size()));
    TraceRow r;
    r.k = parse_int(f[0], "k");
    if (r.k <= prev_k)
      throw DomainError("trace CSV: iteration numbers must increase");
    prev_k = r.k;
    r.f_value = parse_double(f[1], "f_value");
    if (!f[2].empty()) r.f_gap = parse_double(f[2], "f_gap");
    r.grad_norm = parse_double(f[3], "grad_norm");
    r.lambda = parse_double(f[4], "lambda");
    r.step_norm = parse_double(f[5], "step_norm");
    r.inner_iters = parse_int(f[6], "inner_iters");
    r.counters.n_value = parse_int(f[7], "n_f");
    r.counters.n_grad = parse_int(f[8], "n_grad");
    r.counters.n_hess = parse_int(f[9], "n_hess");
    r.counters.n_d3 = parse_int(f[10], "n_d3");
    r.counters.n_component = parse_int(f[11], "n_comp");
    r.elapsed_s = parse_double(f[12], "elapsed_s");
    t.rows.push_back(std::move(r));
  }
  return t;
}

void Trace::write_csv_file(const std::string& path, bool wall_clock) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DomainError("trace CSV: cannot open '" + tmp + "'");
    out << to_csv(wall_clock);
    if (!out) throw DomainError("trace CSV: write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DomainError("trace CSV: rename to '" + path + "' failed");
}

}  // namespace tensoropt
