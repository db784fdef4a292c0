#include "tensoropt/problems.hpp"

#include "tensoropt/driver.hpp"
#include "tensoropt/trace.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace tensoropt {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

long long parse_int_field(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw DomainError("problem spec: key '" + key + "' has non-integer value '" +
                      value + "'");
  }
  if (used != value.size())
    throw DomainError("problem spec: key '" + key + "' has non-integer value '" +
                      value + "'");
  return v;
}

double parse_real_field(const std::string& key, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + value.size() || value.empty())
    throw DomainError("problem spec: key '" + key + "' has non-numeric value '" +
                      value + "'");
  return v;
}

Vector parse_vector_field(const std::string& key, const std::string& value) {
  std::vector<double> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ','))
    parts.push_back(parse_real_field(key, trim(item)));
  if (parts.empty())
    throw DomainError("problem spec: key '" + key + "' is empty");
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = parts[i];
  return v;
}

/* phi(t) = |t|^q and its derivatives for q in {2, 3, 4}.  For q = 3 the
 * third derivative jumps at 0; the symmetric value 0 is used there. */
double phi_val(int q, double t) {
  switch (q) {
    case 2: return t * t;
    case 3: return std::abs(t) * t * t;
    default: return (t * t) * (t * t);
  }
}
double phi_d1(int q, double t) {
  switch (q) {
    case 2: return 2.0 * t;
    case 3: return 3.0 * t * std::abs(t);
    default: return 4.0 * t * t * t;
  }
}
double phi_d2(int q, double t) {
  switch (q) {
    case 2: return 2.0;
    case 3: return 6.0 * std::abs(t);
    default: return 12.0 * t * t;
  }
}
double phi_d3(int q, double t) {
  switch (q) {
    case 2: return 0.0;
    case 3: return t == 0.0 ? 0.0 : (t > 0.0 ? 6.0 : -6.0);
    default: return 24.0 * t;
  }
}

/* Chain of forward differences u = Bx, u_1 = x_1, u_i = x_i - x_{i-1},
 * composed with the power penalty phi. */
class WorstCase final : public Objective {
 public:
  WorstCase(int d, int p) : d_(d), q_(p + 1) {
    B_ = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      B_(i, i) = 1.0;
      if (i > 0) B_(i, i - 1) = -1.0;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(B_.transpose() * B_);
    norm_b_ = std::sqrt(es.eigenvalues().maxCoeff());
    meta_.order_available = 3;
    // Conservative global constant for the order the instance targets;
    // the per-term constant is (p+1)! exactly.
    meta_.lipschitz[static_cast<std::size_t>(p)] =
        factorial(p + 1) * std::pow(norm_b_, p);
    if (p == 1) mu_ = 2.0 * es.eigenvalues().minCoeff();
  }

  int dimension() const override { return d_; }
  int order_available() const override { return 3; }
  OracleMeta meta() const override { return meta_; }
  double mu() const { return mu_; }

  double value(const Vector& x) const override {
    const Vector u = B_ * x;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) acc += phi_val(q_, u(i));
    return acc;
  }
  Vector gradient(const Vector& x) const override {
    const Vector u = B_ * x;
    Vector g(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) g(i) = phi_d1(q_, u(i));
    return B_.transpose() * g;
  }
  Matrix hessian(const Vector& x) const override {
    const Vector u = B_ * x;
    Vector dgg(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) dgg(i) = phi_d2(q_, u(i));
    return B_.transpose() * dgg.asDiagonal() * B_;
  }
  Vector d3_apply(const Vector& x, const Vector& h) const override {
    const Vector u = B_ * x;
    const Vector w = B_ * h;
    Vector t(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i)
      t(i) = phi_d3(q_, u(i)) * w(i) * w(i);
    return B_.transpose() * t;
  }

 private:
  int d_;
  int q_;
  Matrix B_;
  double norm_b_ = 0.0;
  double mu_ = kNaN;
  OracleMeta meta_;
};

double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}
double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/* Averaged logistic loss over rows a_j with labels y_j = +-1, each
 * component carrying ridge/2 ||x||^2 so the ridge survives sampling. */
class Logistic final : public FiniteSumObjective {
 public:
  Logistic(Matrix features, Vector labels, double ridge)
      : FiniteSumObjective(features.rows()),
        A_(std::move(features)),
        y_(std::move(labels)),
        ridge_(ridge) {
    const auto m = static_cast<double>(A_.rows());
    double max_row = 0.0, sum3 = 0.0, sum4 = 0.0;
    for (Eigen::Index j = 0; j < A_.rows(); ++j) {
      const double r = A_.row(j).norm();
      max_row = std::max(max_row, r);
      sum3 += r * r * r;
      sum4 += r * r * r * r;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(A_.transpose() * A_);
    meta_.order_available = 3;
    if (ridge_ == 0.0) meta_.lipschitz[0] = max_row;
    meta_.lipschitz[1] = es.eigenvalues().maxCoeff() / (4.0 * m) + ridge_;
    meta_.lipschitz[2] = sum3 / (6.0 * kSqrt3 * m);
    meta_.lipschitz[3] = sum4 / (8.0 * m);
    meta_.noise[1] = 2.0 * max_row;
    meta_.noise[2] = max_row * max_row / 2.0;
    meta_.noise[3] = max_row * max_row * max_row / (3.0 * kSqrt3);
  }

  int dimension() const override { return static_cast<int>(A_.cols()); }
  int order_available() const override { return 3; }
  OracleMeta meta() const override { return meta_; }
  double ridge() const { return ridge_; }

  double component_value(long long j, const Vector& x) const override {
    const auto r = static_cast<Eigen::Index>(j);
    const double z = y_(r) * A_.row(r).dot(x);
    return softplus(-z) + 0.5 * ridge_ * x.squaredNorm();
  }
  Vector component_gradient(long long j, const Vector& x) const override {
    const auto r = static_cast<Eigen::Index>(j);
    const double z = y_(r) * A_.row(r).dot(x);
    const double s = sigmoid(-z);
    return (-y_(r) * s) * A_.row(r).transpose() + ridge_ * x;
  }
  Matrix component_hessian(long long j, const Vector& x) const override {
    const auto r = static_cast<Eigen::Index>(j);
    const double z = y_(r) * A_.row(r).dot(x);
    const double s = sigmoid(-z);
    Matrix H = (s * (1.0 - s)) * (A_.row(r).transpose() * A_.row(r));
    H.diagonal().array() += ridge_;
    return H;
  }
  Vector component_d3_apply(long long j, const Vector& x,
                            const Vector& h) const override {
    const auto r = static_cast<Eigen::Index>(j);
    const double z = y_(r) * A_.row(r).dot(x);
    const double s = sigmoid(-z);
    const double d3z = -s * (1.0 - s) * (1.0 - 2.0 * s);
    const double ah = A_.row(r).dot(h);
    return (y_(r) * d3z * ah * ah) * A_.row(r).transpose();
  }

 private:
  Matrix A_;
  Vector y_;
  double ridge_;
  OracleMeta meta_;
};

/* log sum exp(a_k.x + b_k): all derivatives are cumulants of the row image
 * w = Ah under the softmax weights. */
class LogSumExp final : public Objective {
 public:
  LogSumExp(Matrix rows, Vector offsets)
      : A_(std::move(rows)), b_(std::move(offsets)) {
    double max_row = 0.0;
    for (Eigen::Index j = 0; j < A_.rows(); ++j)
      max_row = std::max(max_row, A_.row(j).norm());
    Eigen::SelfAdjointEigenSolver<Matrix> es(A_.transpose() * A_);
    const double lam = es.eigenvalues().maxCoeff();
    meta_.order_available = 3;
    meta_.lipschitz[1] = lam;
    // Conservative cumulant bounds (validated empirically by the
    // derivative suite).
    meta_.lipschitz[2] = 6.0 * max_row * lam;
    meta_.lipschitz[3] = 32.0 * max_row * max_row * lam;
  }

  int dimension() const override { return static_cast<int>(A_.cols()); }
  int order_available() const override { return 3; }
  OracleMeta meta() const override { return meta_; }

  double value(const Vector& x) const override {
    const Vector w = A_ * x + b_;
    const double M = w.maxCoeff();
    return M + std::log((w.array() - M).exp().sum());
  }
  Vector gradient(const Vector& x) const override {
    return A_.transpose() * softmax(x);
  }
  Matrix hessian(const Vector& x) const override {
    const Vector pi = softmax(x);
    const Vector g = A_.transpose() * pi;
    return A_.transpose() * pi.asDiagonal() * A_ - g * g.transpose();
  }
  Vector d3_apply(const Vector& x, const Vector& h) const override {
    const Vector pi = softmax(x);
    const Vector w = A_ * h;
    const double m1 = pi.dot(w);
    const double m2 = pi.dot(w.cwiseProduct(w));
    const double var = m2 - m1 * m1;
    Vector u(pi.size());
    for (Eigen::Index k = 0; k < pi.size(); ++k) {
      const double c = w(k) - m1;
      u(k) = pi(k) * (c * c - var);
    }
    return A_.transpose() * u;
  }

 private:
  Vector softmax(const Vector& x) const {
    const Vector w = A_ * x + b_;
    const double M = w.maxCoeff();
    Vector e = (w.array() - M).exp();
    return e / e.sum();
  }

  Matrix A_;
  Vector b_;
  OracleMeta meta_;
};

class Quadratic final : public Objective {
 public:
  Quadratic(Matrix Q, Vector b) : Q_(std::move(Q)), b_(std::move(b)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q_);
    meta_.order_available = 3;
    meta_.lipschitz[1] = es.eigenvalues().maxCoeff();
    meta_.lipschitz[2] = 0.0;
    meta_.lipschitz[3] = 0.0;
    mu_ = es.eigenvalues().minCoeff();
  }

  int dimension() const override { return static_cast<int>(Q_.rows()); }
  int order_available() const override { return 3; }
  OracleMeta meta() const override { return meta_; }
  double mu() const { return mu_; }

  double value(const Vector& x) const override {
    return 0.5 * x.dot(Q_ * x) - b_.dot(x);
  }
  Vector gradient(const Vector& x) const override { return Q_ * x - b_; }
  Matrix hessian(const Vector&) const override { return Q_; }
  Vector d3_apply(const Vector& x, const Vector&) const override {
    return Vector::Zero(x.size());
  }

 private:
  Matrix Q_;
  Vector b_;
  double mu_ = kNaN;
  OracleMeta meta_;
};

class QuarticQuadratic final : public Objective {
 public:
  QuarticQuadratic(Matrix Q, double beta) : Q_(std::move(Q)), beta_(beta) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q_);
    meta_.order_available = 3;
    meta_.lipschitz[3] = 6.0 * beta_;  // exact: the fourth derivative is constant
    mu_ = es.eigenvalues().minCoeff();
  }

  int dimension() const override { return static_cast<int>(Q_.rows()); }
  int order_available() const override { return 3; }
  OracleMeta meta() const override { return meta_; }
  double mu() const { return mu_; }

  double value(const Vector& x) const override {
    const double n2 = x.squaredNorm();
    return 0.5 * x.dot(Q_ * x) + 0.25 * beta_ * n2 * n2;
  }
  Vector gradient(const Vector& x) const override {
    return Q_ * x + (beta_ * x.squaredNorm()) * x;
  }
  Matrix hessian(const Vector& x) const override {
    Matrix H = Q_ + (2.0 * beta_) * (x * x.transpose());
    H.diagonal().array() += beta_ * x.squaredNorm();
    return H;
  }
  Vector d3_apply(const Vector& x, const Vector& h) const override {
    return beta_ * (4.0 * x.dot(h) * h + 2.0 * h.squaredNorm() * x);
  }

 private:
  Matrix Q_;
  double beta_;
  double mu_ = kNaN;
  OracleMeta meta_;
};

Matrix uniform_matrix(Rng& rng, long long rows, int cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix A(rows, cols);
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = u(rng);
  return A;
}

/* Random rotation of the spectrum 1..cond (inclusive, linearly spaced). */
Matrix spectrum_matrix(Rng& rng, int d, double cond) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix G(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) G(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix U = qr.householderQ();
  Vector lam(d);
  for (int i = 0; i < d; ++i)
    lam(i) = d == 1 ? 1.0 : 1.0 + (cond - 1.0) * i / (d - 1.0);
  Matrix Q = U * lam.asDiagonal() * U.transpose();
  return 0.5 * (Q + Q.transpose());
}

void validate_spec(const ProblemSpec& spec) {
  if (spec.d < 1) throw DomainError("problem spec: d must be >= 1");
  if (spec.p_target < 1 || spec.p_target > 3)
    throw DomainError("problem spec: p_target must be in {1, 2, 3}");
  if (spec.samples < 1)
    throw DomainError("problem spec: samples must be >= 1");
  if (spec.ridge < 0.0) throw DomainError("problem spec: ridge must be >= 0");
  if (spec.cond < 1.0) throw DomainError("problem spec: cond must be >= 1");
  if (spec.beta < 0.0) throw DomainError("problem spec: beta must be >= 0");
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::worst_case_fp: return "worst_case_fp";
    case Family::logistic: return "logistic";
    case Family::log_sum_exp: return "log_sum_exp";
    case Family::quadratic: return "quadratic";
    case Family::quartic_quadratic: return "quartic_quadratic";
  }
  throw DomainError("unknown problem family");
}

Family parse_family(const std::string& name) {
  if (name == "worst_case_fp") return Family::worst_case_fp;
  if (name == "logistic") return Family::logistic;
  if (name == "log_sum_exp") return Family::log_sum_exp;
  if (name == "quadratic") return Family::quadratic;
  if (name == "quartic_quadratic") return Family::quartic_quadratic;
  throw DomainError("problem spec: unknown family '" + name + "'");
}

std::unique_ptr<FiniteSumObjective> make_logistic_objective(Matrix features,
                                                            Vector labels,
                                                            double ridge) {
  if (features.rows() != labels.size())
    throw DomainError("logistic data: feature rows and labels disagree");
  if (features.rows() < 1) throw DomainError("logistic data: no samples");
  if (ridge < 0.0) throw DomainError("logistic data: ridge must be >= 0");
  return std::make_unique<Logistic>(std::move(features), std::move(labels),
                                    ridge);
}

ProblemSpec parse_problem_spec(const std::string& text) {
  ProblemSpec spec;
  bool have_family = false;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw DomainError("problem spec: line without '=': '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw DomainError("problem spec: empty key");
    if (!seen.insert(key).second)
      throw DomainError("problem spec: duplicate key '" + key + "'");

    if (key == "family") {
      spec.family = parse_family(value);
      have_family = true;
    } else if (key == "d") {
      spec.d = static_cast<int>(parse_int_field(key, value));
    } else if (key == "p_target") {
      spec.p_target = static_cast<int>(parse_int_field(key, value));
    } else if (key == "data_seed") {
      spec.data_seed = static_cast<std::uint64_t>(parse_int_field(key, value));
    } else if (key == "samples") {
      spec.samples = parse_int_field(key, value);
    } else if (key == "ridge") {
      spec.ridge = parse_real_field(key, value);
    } else if (key == "cond") {
      spec.cond = parse_real_field(key, value);
    } else if (key == "beta") {
      spec.beta = parse_real_field(key, value);
    } else if (key == "L0") {
      spec.lipschitz[0] = parse_real_field(key, value);
    } else if (key == "L1") {
      spec.lipschitz[1] = parse_real_field(key, value);
    } else if (key == "L2") {
      spec.lipschitz[2] = parse_real_field(key, value);
    } else if (key == "L3") {
      spec.lipschitz[3] = parse_real_field(key, value);
    } else if (key == "sigma_r") {
      spec.sigma_r = parse_real_field(key, value);
    } else if (key == "growth_r") {
      spec.growth_r = static_cast<int>(parse_int_field(key, value));
    } else if (key == "mu") {
      spec.mu = parse_real_field(key, value);
    } else if (key == "x_star") {
      spec.x_star = parse_vector_field(key, value);
    } else if (key == "f_star") {
      spec.f_star = parse_real_field(key, value);
    } else if (key == "ref_tol") {
      spec.ref_tol = parse_real_field(key, value);
    } else {
      throw DomainError("problem spec: unknown key '" + key + "'");
    }
  }
  if (!have_family) throw DomainError("problem spec: missing key 'family'");
  validate_spec(spec);
  return spec;
}

ProblemSpec load_problem_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("problem spec: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem_spec(buf.str());
}

std::string serialize_problem_spec(const ProblemSpec& spec) {
  std::ostringstream out;
  out << "family = " << to_string(spec.family) << "\n";
  out << "d = " << spec.d << "\n";
  out << "p_target = " << spec.p_target << "\n";
  out << "data_seed = " << spec.data_seed << "\n";
  out << "samples = " << spec.samples << "\n";
  out << "ridge = " << format_double(spec.ridge) << "\n";
  out << "cond = " << format_double(spec.cond) << "\n";
  out << "beta = " << format_double(spec.beta) << "\n";
  for (int i = 0; i < 4; ++i)
    if (is_known(spec.lipschitz[static_cast<std::size_t>(i)]))
      out << "L" << i << " = "
          << format_double(spec.lipschitz[static_cast<std::size_t>(i)]) << "\n";
  if (is_known(spec.sigma_r)) {
    out << "sigma_r = " << format_double(spec.sigma_r) << "\n";
    out << "growth_r = " << spec.growth_r << "\n";
  }
  if (is_known(spec.mu)) out << "mu = " << format_double(spec.mu) << "\n";
  if (spec.x_star) {
    out << "x_star = ";
    for (Eigen::Index i = 0; i < spec.x_star->size(); ++i) {
      if (i) out << ",";
      out << format_double((*spec.x_star)(i));
    }
    out << "\n";
  }
  if (spec.f_star) out << "f_star = " << format_double(*spec.f_star) << "\n";
  if (is_known(spec.ref_tol))
    out << "ref_tol = " << format_double(spec.ref_tol) << "\n";
  return out.str();
}

BuiltProblem make_problem(const ProblemSpec& spec_in) {
  validate_spec(spec_in);
  BuiltProblem built;
  built.spec = spec_in;
  ProblemSpec& spec = built.spec;

  switch (spec.family) {
    case Family::worst_case_fp: {
      auto obj = std::make_unique<WorstCase>(spec.d, spec.p_target);
      if (spec.p_target == 1 && !is_known(spec.mu)) {
        spec.mu = obj->mu();
        spec.sigma_r = spec.mu / 2.0;
        spec.growth_r = 2;
      }
      built.objective = std::move(obj);
      if (!spec.x_star) spec.x_star = Vector::Zero(spec.d);
      if (!spec.f_star) spec.f_star = 0.0;
      if (!is_known(spec.ref_tol)) spec.ref_tol = 0.0;
      break;
    }
    case Family::logistic: {
      Rng rng = make_rng(spec.data_seed, 0);
      Matrix A = uniform_matrix(rng, spec.samples, spec.d);
      const Vector planted = gaussian_vector(rng, spec.d);
      Vector y(spec.samples);
      for (Eigen::Index j = 0; j < y.size(); ++j)
        y(j) = A.row(j).dot(planted) >= 0.0 ? 1.0 : -1.0;
      built.objective =
          std::make_unique<Logistic>(std::move(A), std::move(y), spec.ridge);
      if (spec.ridge > 0.0 && !is_known(spec.mu)) {
        spec.mu = spec.ridge;
        spec.sigma_r = spec.mu / 2.0;
        spec.growth_r = 2;
      }
      break;
    }
    case Family::log_sum_exp: {
      Rng rng = make_rng(spec.data_seed, 0);
      Matrix A = uniform_matrix(rng, spec.samples, spec.d);
      Vector b(spec.samples);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = u(rng);
      built.objective = std::make_unique<LogSumExp>(std::move(A), std::move(b));
      break;
    }
    case Family::quadratic: {
      Rng rng = make_rng(spec.data_seed, 0);
      Matrix Q = spectrum_matrix(rng, spec.d, spec.cond);
      const Vector center = gaussian_vector(rng, spec.d);
      Vector b = Q * center;
      auto obj = std::make_unique<Quadratic>(std::move(Q), std::move(b));
      if (!spec.f_star) spec.f_star = obj->value(center);
      if (!spec.x_star) spec.x_star = center;
      if (!is_known(spec.mu)) {
        spec.mu = obj->mu();
        spec.sigma_r = spec.mu / 2.0;
        spec.growth_r = 2;
      }
      if (!is_known(spec.ref_tol)) spec.ref_tol = 1e-12;
      built.objective = std::move(obj);
      break;
    }
    case Family::quartic_quadratic: {
      if (spec.p_target != 3)
        throw CapabilityError(
            "quartic_quadratic targets third-order runs only (no finite "
            "L1/L2); set p_target = 3");
      Rng rng = make_rng(spec.data_seed, 0);
      auto obj = std::make_unique<QuarticQuadratic>(
          spectrum_matrix(rng, spec.d, spec.cond), spec.beta);
      if (!is_known(spec.mu)) {
        spec.mu = obj->mu();
        spec.sigma_r = spec.mu / 2.0;
        spec.growth_r = 2;
      }
      built.objective = std::move(obj);
      if (!spec.x_star) spec.x_star = Vector::Zero(spec.d);
      if (!spec.f_star) spec.f_star = 0.0;
      if (!is_known(spec.ref_tol)) spec.ref_tol = 0.0;
      break;
    }
  }

  // Fold the oracle's derived constants into the spec (user-provided
  // values win).
  const OracleMeta meta = built.objective->meta();
  for (std::size_t i = 0; i < 4; ++i)
    if (!is_known(spec.lipschitz[i]) && is_known(meta.lipschitz[i]))
      spec.lipschitz[i] = meta.lipschitz[i];
  return built;
}

Vector default_start(const ProblemSpec& spec) {
  switch (spec.family) {
    case Family::worst_case_fp:
    case Family::quartic_quadratic:
      return Vector::Constant(spec.d, 1.0 / std::sqrt(double(spec.d)));
    default:
      return Vector::Zero(spec.d);
  }
}

Reference reference_solution(const ProblemSpec& spec, double tol) {
  if (!(tol > 0.0)) throw DomainError("reference_solution: tol must be > 0");
  BuiltProblem built = make_problem(spec);
  const Objective& f = *built.objective;

  if (built.spec.x_star && built.spec.f_star) {
    Reference ref;
    ref.x_star = *built.spec.x_star;
    ref.f_star = *built.spec.f_star;
    ref.grad_norm = f.gradient(ref.x_star).norm();
    ref.tol = tol;
    return ref;
  }

  const double L2 = built.spec.lipschitz[2];
  if (!is_known(L2))
    throw CapabilityError(
        "reference_solution: no closed form and no L2 constant to run the "
        "certifying solvers with");
  SolverConfig cfg;
  cfg.p = 2;
  cfg.H = 3.0 * L2;
  cfg.eps_grad = tol * 1e-3;
  cfg.max_outer = 500;

  const Vector x0 = default_start(built.spec);
  Vector x_primary = x0, x_check = x0;
  RunHooks hooks_primary{[&x_primary](long long, const Vector& y) {
    x_primary = y;
  }};
  RunHooks hooks_check{[&x_check](long long, const Vector& y) { x_check = y; }};

  Trace primary;
  if (is_known(built.spec.sigma_r) && built.spec.growth_r == 2 &&
      is_known(built.spec.mu)) {
    // Certified start radius from strong convexity: the logistic loss is
    // nonnegative, so ||x0 - x*||^2 <= 2 f(x0) / mu.
    const double R0 = std::sqrt(2.0 * f.value(x0) / built.spec.mu) + 1.0;
    primary = restarted_run(f, x0, cfg, 2, built.spec.sigma_r, R0, 25, nullptr,
                            &hooks_primary);
  } else {
    primary = msn_run(f, x0, cfg, nullptr, &hooks_primary);
  }
  Trace check = basic_tensor_run(f, x0, cfg, {0, 0, 0, 0}, nullptr,
                                 &hooks_check);

  const double f1 = primary.rows.back().f_value;
  const double f2 = check.rows.back().f_value;
  if (primary.status == TerminationStatus::budget_exhausted ||
      check.status == TerminationStatus::budget_exhausted)
    throw CertificationError(
        "reference_solution: certifying runs exhausted their budget before "
        "reaching the certificate tolerance");
  if (std::abs(f1 - f2) > tol)
    throw CertificationError(
        "reference_solution: independent solvers disagree: " +
        format_double(f1) + " vs " + format_double(f2));

  Reference ref;
  if (f1 <= f2) {
    ref.x_star = x_primary;
    ref.f_star = f1;
  } else {
    ref.x_star = x_check;
    ref.f_star = f2;
  }
  ref.grad_norm = f.gradient(ref.x_star).norm();
  ref.tol = tol;
  return ref;
}

GridResult brute_force_min_model(const ModelState& state, double box_halfwidth,
                                 int grid_points_per_axis) {
  const int d = state.dimension();
  if (d > 3)
    throw CapabilityError("brute_force_min_model: grids are limited to d <= 3");
  if (d < 1) throw DomainError("brute_force_min_model: empty model");
  if (!(box_halfwidth > 0.0))
    throw DomainError("brute_force_min_model: box_halfwidth must be > 0");
  const int n = grid_points_per_axis;
  if (n < 3 || n % 2 == 0)
    throw DomainError(
        "brute_force_min_model: grid_points_per_axis must be odd and >= 3 so "
        "the center is a grid point");
  double total = 1.0;
  for (int axis = 0; axis < d; ++axis) total *= n;
  if (total > 5e7)
    throw DomainError("brute_force_min_model: grid too large");

  const auto scan = [&](const Vector& center, double half) {
    GridResult best;
    best.s = center;
    best.value = std::numeric_limits<double>::infinity();
    std::array<int, 3> idx{0, 0, 0};
    Vector s(d);
    const long long count = static_cast<long long>(std::llround(total));
    for (long long t = 0; t < count; ++t) {
      long long rem = t;
      for (int axis = 0; axis < d; ++axis) {
        idx[static_cast<std::size_t>(axis)] = static_cast<int>(rem % n);
        rem /= n;
      }
      for (int axis = 0; axis < d; ++axis)
        s(axis) = center(axis) +
                  half * (2.0 * idx[static_cast<std::size_t>(axis)] / (n - 1) -
                          1.0);
      const double v = model_value(state, s);
      if (v < best.value) {
        best.value = v;
        best.s = s;
      }
    }
    return best;
  };

  GridResult coarse = scan(Vector::Zero(d), box_halfwidth);
  // One refinement pass at a tenth of the spacing around the incumbent;
  // the incumbent itself is the center grid point, so the result can only
  // improve.
  GridResult fine = scan(coarse.s, box_halfwidth / 10.0);
  return fine.value <= coarse.value ? fine : coarse;
}

}  // namespace tensoropt
