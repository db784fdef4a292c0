#include "tensoropt/problems.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <memory>

#include "tensoropt/model.hpp"
#include "test_util.hpp"

namespace tensoropt {
namespace {

Matrix forward_difference_matrix(int d) {
  Matrix B = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    B(i, i) = 1.0;
    if (i > 0) B(i, i - 1) = -1.0;
  }
  return B;
}

TEST(WorstCase, OneDimensionalIsThePurePower) {
  ProblemSpec spec;
  spec.family = Family::worst_case_fp;
  spec.d = 1;
  spec.p_target = 3;
  BuiltProblem built = make_problem(spec);
  Vector x(1), h(1);
  x << 1.5;
  h << 1.0;
  EXPECT_DOUBLE_EQ(built.objective->value(x), std::pow(1.5, 4));
  EXPECT_DOUBLE_EQ(built.objective->gradient(x)(0), 4.0 * std::pow(1.5, 3));
  EXPECT_DOUBLE_EQ(built.objective->hessian(x)(0, 0), 12.0 * 1.5 * 1.5);
  EXPECT_DOUBLE_EQ(built.objective->d3_apply(x, h)(0), 24.0 * 1.5);

  ASSERT_TRUE(built.spec.x_star.has_value());
  EXPECT_EQ(built.spec.x_star->norm(), 0.0);
  EXPECT_EQ(*built.spec.f_star, 0.0);
  EXPECT_EQ(built.spec.ref_tol, 0.0);
}

TEST(WorstCase, StoredConstantsMatchTheDifferenceChain) {
  const int d = 10;
  const Matrix B = forward_difference_matrix(d);
  Eigen::SelfAdjointEigenSolver<Matrix> es(B.transpose() * B);
  const double norm_b = std::sqrt(es.eigenvalues().maxCoeff());

  for (int p = 1; p <= 3; ++p) {
    ProblemSpec spec;
    spec.family = Family::worst_case_fp;
    spec.d = d;
    spec.p_target = p;
    BuiltProblem built = make_problem(spec);
    const auto& L = built.spec.lipschitz;
    EXPECT_DOUBLE_EQ(L[static_cast<std::size_t>(p)],
                     factorial(p + 1) * std::pow(norm_b, p))
        << "p=" << p;
    for (int i = 0; i < 4; ++i)
      if (i != p) EXPECT_FALSE(is_known(L[static_cast<std::size_t>(i)]));
    if (p == 1) {
      EXPECT_DOUBLE_EQ(built.spec.mu, 2.0 * es.eigenvalues().minCoeff());
      EXPECT_DOUBLE_EQ(built.spec.sigma_r, built.spec.mu / 2.0);
      EXPECT_EQ(built.spec.growth_r, 2);
    } else {
      EXPECT_FALSE(is_known(built.spec.mu));
    }
  }
}

TEST(WorstCase, EmpiricalThirdDerivativeLipschitzWithinStoredBound) {
  ProblemSpec spec;
  spec.family = Family::worst_case_fp;
  spec.d = 10;
  spec.p_target = 3;
  BuiltProblem built = make_problem(spec);
  const double L3 = built.spec.lipschitz[3];
  Rng rng = make_rng(77);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Vector x = ball_vector(rng, 10, 1.0);
    const Vector y = ball_vector(rng, 10, 1.0);
    const Vector h = unit_vector(rng, 10);
    const double num =
        (built.objective->d3_apply(x, h) - built.objective->d3_apply(y, h))
            .norm();
    const double den = (x - y).norm();
    if (den > 1e-12) worst = std::max(worst, num / den);
  }
  EXPECT_GT(worst, 0.0);
  EXPECT_LE(worst, L3 * (1.0 + 1e-9));
}

TEST(WorstCase, HessianIsPositiveSemidefinite) {
  for (int p = 1; p <= 3; ++p) {
    ProblemSpec spec;
    spec.family = Family::worst_case_fp;
    spec.d = 6;
    spec.p_target = p;
    BuiltProblem built = make_problem(spec);
    Rng rng = make_rng(31 + static_cast<std::uint64_t>(p));
    for (int t = 0; t < 20; ++t) {
      const Vector x = ball_vector(rng, 6, 2.0);
      const Vector h = unit_vector(rng, 6);
      EXPECT_GE(h.dot(built.objective->hessian(x) * h), -1e-10);
    }
  }
}

TEST(Quadratic, DerivedConstantsAndClosedForm) {
  ProblemSpec spec;
  spec.family = Family::quadratic;
  spec.d = 7;
  spec.cond = 10.0;
  spec.data_seed = 3;
  BuiltProblem built = make_problem(spec);

  EXPECT_NEAR(built.spec.lipschitz[1], 10.0, 1e-8);
  EXPECT_DOUBLE_EQ(built.spec.lipschitz[2], 0.0);
  EXPECT_DOUBLE_EQ(built.spec.lipschitz[3], 0.0);
  EXPECT_NEAR(built.spec.mu, 1.0, 1e-8);
  EXPECT_DOUBLE_EQ(built.spec.sigma_r, built.spec.mu / 2.0);
  EXPECT_EQ(built.spec.growth_r, 2);
  EXPECT_DOUBLE_EQ(built.spec.ref_tol, 1e-12);

  ASSERT_TRUE(built.spec.x_star && built.spec.f_star);
  // b is precomputed as Q x*, so the gradient at x* cancels bitwise.
  EXPECT_EQ(built.objective->gradient(*built.spec.x_star).norm(), 0.0);
  EXPECT_EQ(*built.spec.f_star, built.objective->value(*built.spec.x_star));

  // The spectrum really is [1, cond]: check through the exact Hessian.
  Eigen::SelfAdjointEigenSolver<Matrix> es(
      built.objective->hessian(Vector::Zero(7)));
  EXPECT_NEAR(es.eigenvalues().minCoeff(), 1.0, 1e-8);
  EXPECT_NEAR(es.eigenvalues().maxCoeff(), 10.0, 1e-8);
}

TEST(Quartic, DerivedConstantsAndTargetRestriction) {
  ProblemSpec spec;
  spec.family = Family::quartic_quadratic;
  spec.d = 5;
  spec.p_target = 3;
  spec.beta = 0.7;
  spec.data_seed = 9;
  BuiltProblem built = make_problem(spec);

  EXPECT_DOUBLE_EQ(built.spec.lipschitz[3], 6.0 * 0.7);
  EXPECT_NEAR(built.spec.mu, 1.0, 1e-8);
  EXPECT_DOUBLE_EQ(built.spec.sigma_r, built.spec.mu / 2.0);
  ASSERT_TRUE(built.spec.x_star && built.spec.f_star);
  EXPECT_EQ(built.spec.x_star->norm(), 0.0);
  EXPECT_EQ(*built.spec.f_star, 0.0);

  spec.p_target = 2;
  try {
    make_problem(spec);
    FAIL() << "expected CapabilityError";
  } catch (const CapabilityError& e) {
    EXPECT_NE(std::string(e.what()).find("third-order"), std::string::npos);
  }
}

TEST(Logistic, MetaFormulasMatchHandComputation) {
  Rng rng = make_rng(40);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const long long m = 30;
  const int d = 4;
  Matrix A(m, d);
  for (long long r = 0; r < m; ++r)
    for (int c = 0; c < d; ++c) A(r, c) = u(rng);
  Vector labels(m);
  for (long long r = 0; r < m; ++r) labels[r] = u(rng) > 0.0 ? 1.0 : -1.0;
  const double ridge = 0.05;
  auto f = make_logistic_objective(A, labels, ridge);
  const OracleMeta meta = f->meta();

  double max_row = 0.0, sum3 = 0.0, sum4 = 0.0;
  for (long long r = 0; r < m; ++r) {
    const double nr = A.row(r).norm();
    max_row = std::max(max_row, nr);
    sum3 += nr * nr * nr;
    sum4 += nr * nr * nr * nr;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(A.transpose() * A);
  const double md = static_cast<double>(m);
  EXPECT_FALSE(is_known(meta.lipschitz[0]));  // ridge makes f coercive, not flat
  EXPECT_DOUBLE_EQ(meta.lipschitz[1],
                   es.eigenvalues().maxCoeff() / (4.0 * md) + ridge);
  EXPECT_DOUBLE_EQ(meta.lipschitz[2], sum3 / (6.0 * std::sqrt(3.0) * md));
  EXPECT_DOUBLE_EQ(meta.lipschitz[3], sum4 / (8.0 * md));
  EXPECT_DOUBLE_EQ(meta.noise[1], 2.0 * max_row);
  EXPECT_DOUBLE_EQ(meta.noise[2], max_row * max_row / 2.0);
  EXPECT_DOUBLE_EQ(meta.noise[3],
                   max_row * max_row * max_row / (3.0 * std::sqrt(3.0)));

  auto flat = make_logistic_objective(A, labels, 0.0);
  EXPECT_DOUBLE_EQ(flat->meta().lipschitz[0], max_row);

  // Value is the plain component mean, and the ridge keeps every Hessian
  // uniformly positive definite.
  Vector x = Vector::Constant(d, 0.2);
  double acc = 0.0;
  for (long long j = 0; j < m; ++j) acc += f->component_value(j, x);
  EXPECT_EQ(f->value(x), acc / md);
  Eigen::SelfAdjointEigenSolver<Matrix> hs(f->hessian(x));
  EXPECT_GE(hs.eigenvalues().minCoeff(), ridge - 1e-12);
}

TEST(Logistic, SpecFillFromRidge) {
  ProblemSpec spec;
  spec.family = Family::logistic;
  spec.d = 4;
  spec.samples = 25;
  spec.ridge = 0.01;
  BuiltProblem built = make_problem(spec);
  EXPECT_DOUBLE_EQ(built.spec.mu, 0.01);
  EXPECT_DOUBLE_EQ(built.spec.sigma_r, 0.005);
  EXPECT_EQ(built.spec.growth_r, 2);
  EXPECT_FALSE(built.spec.x_star.has_value());
  EXPECT_TRUE(is_known(built.spec.lipschitz[1]));
  EXPECT_TRUE(is_known(built.spec.lipschitz[3]));

  spec.ridge = 0.0;
  BuiltProblem flat = make_problem(spec);
  EXPECT_FALSE(is_known(flat.spec.mu));
  EXPECT_FALSE(is_known(flat.spec.sigma_r));
}

TEST(LogSumExp, StoredConstantsMatchReplicatedData) {
  ProblemSpec spec;
  spec.family = Family::log_sum_exp;
  spec.d = 5;
  spec.samples = 20;
  spec.data_seed = 6;
  BuiltProblem built = make_problem(spec);

  // Reproduce the synthetic rows from the documented seed derivation.
  Rng rng = make_rng(spec.data_seed, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix A(spec.samples, spec.d);
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = u(rng);

  double max_row = 0.0;
  for (Eigen::Index j = 0; j < A.rows(); ++j)
    max_row = std::max(max_row, A.row(j).norm());
  Eigen::SelfAdjointEigenSolver<Matrix> es(A.transpose() * A);
  const double lam = es.eigenvalues().maxCoeff();

  EXPECT_DOUBLE_EQ(built.spec.lipschitz[1], lam);
  EXPECT_DOUBLE_EQ(built.spec.lipschitz[2], 6.0 * max_row * lam);
  EXPECT_DOUBLE_EQ(built.spec.lipschitz[3], 32.0 * max_row * max_row * lam);
}

TEST(AllFamilies, DerivativesAgreeWithFiniteDifferences) {
  std::vector<ProblemSpec> specs;
  {
    ProblemSpec s;
    s.family = Family::worst_case_fp;
    s.d = 5;
    s.p_target = 2;
    specs.push_back(s);
    s.p_target = 3;
    specs.push_back(s);
  }
  {
    ProblemSpec s;
    s.family = Family::logistic;
    s.d = 4;
    s.samples = 20;
    s.ridge = 0.01;
    specs.push_back(s);
  }
  {
    ProblemSpec s;
    s.family = Family::log_sum_exp;
    s.d = 4;
    s.samples = 15;
    specs.push_back(s);
  }
  {
    ProblemSpec s;
    s.family = Family::quadratic;
    s.d = 5;
    specs.push_back(s);
  }
  {
    ProblemSpec s;
    s.family = Family::quartic_quadratic;
    s.d = 4;
    s.p_target = 3;
    specs.push_back(s);
  }

  for (const ProblemSpec& s : specs) {
    BuiltProblem built = make_problem(s);
    CountingOracle oracle(*built.objective);
    Rng rng = make_rng(17);
    for (int t = 0; t < 5; ++t) {
      const Vector x = ball_vector(rng, s.d, 1.0);
      const Vector h = unit_vector(rng, s.d);
      const Vector g = built.objective->gradient(x);
      EXPECT_LE(relative_diff(g, fd_gradient(oracle, x)), 1e-6)
          << to_string(s.family);
      EXPECT_LE(relative_diff(Vector(built.objective->hessian(x) * h),
                              fd_hessian_apply(oracle, x, h)),
                1e-5)
          << to_string(s.family);
      EXPECT_LE(relative_diff(built.objective->d3_apply(x, h),
                              fd_third_directional(oracle, x, h)),
                1e-3)
          << to_string(s.family);
    }
  }
}

TEST(SpecText, SerializeParseRoundTrip) {
  ProblemSpec spec;
  spec.family = Family::quartic_quadratic;
  spec.d = 3;
  spec.p_target = 3;
  spec.data_seed = 42;
  spec.samples = 7;
  spec.ridge = 0.125;
  spec.cond = 17.5;
  spec.beta = 1.0 / 3.0;
  spec.lipschitz[1] = 2.5;
  spec.lipschitz[3] = 0.1 + 0.2;  // deliberately non-representable sum
  spec.sigma_r = 1.0 / 7.0;
  spec.growth_r = 3;
  spec.mu = 2.0 / 7.0;
  Vector xs(3);
  xs << 0.1, -1.0 / 3.0, 5e-300;
  spec.x_star = xs;
  spec.f_star = -1.0 / 9.0;
  spec.ref_tol = 1e-13;

  const std::string text = serialize_problem_spec(spec);
  const ProblemSpec parsed = parse_problem_spec(text);
  EXPECT_EQ(serialize_problem_spec(parsed), text);
  EXPECT_EQ(parsed.family, spec.family);
  EXPECT_EQ(parsed.growth_r, 3);
  ASSERT_TRUE(parsed.x_star.has_value());
  EXPECT_EQ((*parsed.x_star - xs).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(*parsed.f_star, *spec.f_star);
  EXPECT_EQ(parsed.lipschitz[3], spec.lipschitz[3]);
  EXPECT_FALSE(is_known(parsed.lipschitz[0]));
}

TEST(SpecText, CommentsAndWhitespace) {
  const ProblemSpec spec = parse_problem_spec(
      "# a comment\n"
      "\n"
      "  family =   logistic  \n"
      "d=6\n"
      "samples = 33  \n");
  EXPECT_EQ(spec.family, Family::logistic);
  EXPECT_EQ(spec.d, 6);
  EXPECT_EQ(spec.samples, 33);
}

TEST(SpecText, Errors) {
  try {
    parse_problem_spec("family = quadratic\nzeta = 3\n");
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("zeta"), std::string::npos);
  }
  try {
    parse_problem_spec("family = quadratic\nd = abc\n");
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("'d'"), std::string::npos);
  }
  EXPECT_THROW(parse_problem_spec("family = quadratic\nd = 2\nd = 3\n"),
               DomainError);
  EXPECT_THROW(parse_problem_spec("family = quadratic\nno equals sign\n"),
               DomainError);
  EXPECT_THROW(parse_problem_spec("d = 2\n"), DomainError);  // family missing
  EXPECT_THROW(parse_problem_spec("family = parabola\n"), DomainError);
  EXPECT_THROW(parse_problem_spec("family = quadratic\n = 3\n"), DomainError);
  EXPECT_THROW(parse_problem_spec("family = quadratic\nd = 0\n"), DomainError);
  EXPECT_THROW(load_problem_spec("/nonexistent/spec.problem"), DomainError);
}

TEST(FamilyNames, RoundTrip) {
  for (Family f :
       {Family::worst_case_fp, Family::logistic, Family::log_sum_exp,
        Family::quadratic, Family::quartic_quadratic})
    EXPECT_EQ(parse_family(to_string(f)), f);
}

TEST(DefaultStart, UnitRadiusForOriginFamilies) {
  ProblemSpec spec;
  spec.family = Family::worst_case_fp;
  spec.d = 9;
  EXPECT_NEAR(default_start(spec).norm(), 1.0, 1e-12);
  spec.family = Family::quartic_quadratic;
  EXPECT_NEAR(default_start(spec).norm(), 1.0, 1e-12);
  spec.family = Family::quadratic;
  EXPECT_EQ(default_start(spec).norm(), 0.0);
  spec.family = Family::logistic;
  EXPECT_EQ(default_start(spec).norm(), 0.0);
}

TEST(BruteForce, RecoversTheSecularRoot) {
  // min 3 s1 + 1/2 ||s||^2 + (2/6) ||s||^3 has the closed-form solution
  // s = (-r, 0) with r + r^2 = 3, i.e. r = (-1 + sqrt(13)) / 2.
  Vector g0(2);
  g0 << 3.0, 0.0;
  ModelState st = testutil::raw_state(2, 2.0, 0.0, g0, Matrix::Identity(2, 2));
  const double r = (-1.0 + std::sqrt(13.0)) / 2.0;
  Vector s_star(2);
  s_star << -r, 0.0;
  const double exact = model_value(st, s_star);

  GridResult grid = brute_force_min_model(st, 2.0, 41);
  EXPECT_GE(grid.value, exact - 1e-12);
  EXPECT_LE(grid.value, exact + 1e-3);
  EXPECT_LE((grid.s - s_star).norm(), 0.05);
}

TEST(BruteForce, ZeroGradientKeepsTheOrigin) {
  ModelState st = testutil::raw_state(2, 2.0, 1.25, Vector::Zero(2),
                                      Matrix::Identity(2, 2));
  GridResult grid = brute_force_min_model(st, 1.0, 21);
  EXPECT_EQ(grid.value, 1.25);
  EXPECT_EQ(grid.s.norm(), 0.0);
}

TEST(BruteForce, Errors) {
  ModelState st = testutil::raw_state(2, 2.0, 0.0, Vector::Ones(2),
                                      Matrix::Identity(2, 2));
  EXPECT_THROW(brute_force_min_model(st, 1.0, 40), DomainError);  // even
  EXPECT_THROW(brute_force_min_model(st, 1.0, 1), DomainError);   // < 3
  EXPECT_THROW(brute_force_min_model(st, 0.0, 21), DomainError);
  ModelState wide = testutil::raw_state(2, 2.0, 0.0, Vector::Ones(4),
                                        Matrix::Identity(4, 4));
  EXPECT_THROW(brute_force_min_model(wide, 1.0, 5), CapabilityError);
}

TEST(LogisticFactory, Validation) {
  Matrix A(3, 2);
  A.setOnes();
  Vector bad(2);
  bad.setOnes();
  EXPECT_THROW(make_logistic_objective(A, bad, 0.0), DomainError);
  Vector ok(3);
  ok << 1.0, -1.0, 1.0;
  EXPECT_THROW(make_logistic_objective(A, ok, -0.1), DomainError);
  EXPECT_THROW(make_logistic_objective(Matrix(0, 2), Vector(0), 0.0),
               DomainError);
  EXPECT_NO_THROW(make_logistic_objective(A, ok, 0.0));
}

TEST(ReferenceSolution, ClosedFormFamiliesEchoTheCertificate) {
  ProblemSpec spec;
  spec.family = Family::quadratic;
  spec.d = 6;
  spec.data_seed = 12;
  Reference ref = reference_solution(spec, 1e-10);
  BuiltProblem built = make_problem(spec);
  EXPECT_EQ((ref.x_star - *built.spec.x_star).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(ref.f_star, *built.spec.f_star);
  EXPECT_EQ(ref.grad_norm, 0.0);
  EXPECT_EQ(ref.tol, 1e-10);
}

TEST(ReferenceSolution, SolverCertifiedLogisticAgrees) {
  ProblemSpec spec;
  spec.family = Family::logistic;
  spec.d = 4;
  spec.samples = 40;
  spec.ridge = 0.1;
  spec.data_seed = 7;
  const double tol = 1e-6;
  Reference ref = reference_solution(spec, tol);
  BuiltProblem built = make_problem(spec);
  EXPECT_LE(ref.grad_norm, tol);
  EXPECT_NEAR(built.objective->value(ref.x_star), ref.f_star,
              1e-12 * std::max(1.0, std::abs(ref.f_star)));
  // Strong convexity at modulus `ridge` turns the gradient certificate into
  // a value certificate.
  const double gap_bound = ref.grad_norm * ref.grad_norm / (2.0 * 0.1);
  EXPECT_LE(gap_bound, tol);
}

TEST(ReferenceSolution, Validation) {
  ProblemSpec spec;
  spec.family = Family::quadratic;
  EXPECT_THROW(reference_solution(spec, 0.0), DomainError);
}

}  // namespace
}  // namespace tensoropt
