#include "tensoropt/subsolve.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace tensoropt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

EigenFactor EigenFactor::decompose(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  if (es.info() != Eigen::Success)
    throw NumericalError("EigenFactor: eigendecomposition failed");
  return EigenFactor{es.eigenvectors(), es.eigenvalues()};
}

EigenFactor EigenFactor::zero(int dim) {
  return EigenFactor{Matrix::Identity(dim, dim), Vector::Zero(dim)};
}

RadialResult radial_root_solve(const EigenFactor& factor, const Vector& c,
                               const std::function<double(double)>& coeff,
                               double tol, int max_iter) {
  const int d = static_cast<int>(c.size());
  RadialResult out;
  out.s = Vector::Zero(d);
  if (c.norm() == 0.0) {
    out.converged = true;
    return out;
  }

  const Vector chat = factor.U.transpose() * c;
  const double lam_min = factor.lam[0];

  // psi(r) = || (A + coeff(r) I)^{-1} c || - r.  +inf encodes "r below the
  // feasible domain" (indefinite shift), which for bracketing purposes acts
  // exactly like a positive mismatch.
  auto psi = [&](double r) -> double {
    ++out.evaluations;
    const double cf = coeff(r);
    if (!(lam_min + cf > 0.0)) return kInf;
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      const double q = chat[i] / (factor.lam[i] + cf);
      acc += q * q;
    }
    return std::sqrt(acc) - r;
  };
  auto step_at = [&](double r) -> Vector {
    const double cf = coeff(r);
    Vector shat(d);
    for (int i = 0; i < d; ++i) shat[i] = -chat[i] / (factor.lam[i] + cf);
    return factor.U * shat;
  };
  auto done = [&](double r, double m) {
    return std::abs(m) <= tol * std::max(1.0, r);
  };

  // Upper bracket: grow until the resolvent is shorter than r.
  double hi = 1.0;
  double psi_hi = psi(hi);
  int grow = 0;
  while (!(psi_hi <= 0.0)) {
    hi *= 2.0;
    psi_hi = psi(hi);
    if (++grow > 400) {
      if (lam_min < 0.0)
        throw ModelConvexityError(
            "radial_root_solve: negative curvature exceeds regularization "
            "(H too small); lam_min = " +
            std::to_string(lam_min));
      throw NumericalError("radial_root_solve: no upper bracket found");
    }
  }
  if (done(hi, psi_hi)) {
    out.r = hi;
    out.mismatch = std::abs(psi_hi);
    out.s = step_at(hi);
    out.converged = true;
    return out;
  }

  // Lower bracket: shrink until psi > 0 (psi -> +inf near the domain edge
  // or near r = 0 for a singular shift, so this terminates unless the
  // minimizer sits at the kink r = 0).
  double lo = hi / 2.0;
  double psi_lo = psi(lo);
  while (psi_lo <= 0.0) {
    if (done(lo, psi_lo)) {
      out.r = lo;
      out.mismatch = std::abs(psi_lo);
      out.s = step_at(lo);
      out.converged = true;
      return out;
    }
    hi = lo;
    psi_hi = psi_lo;
    lo /= 2.0;
    if (lo < 1e-300) {  // root at the origin (norm kink absorbs c)
      out.converged = true;
      return out;
    }
    psi_lo = psi(lo);
  }

  // Bisection until the mismatch passes the tolerance or the interval
  // collapses; every iterate stays inside [lo, hi].
  double r = lo;
  double m = psi_lo;
  while (out.evaluations < max_iter) {
    r = 0.5 * (lo + hi);
    m = psi(r);
    if (done(r, m)) break;
    if (m > 0.0) {
      lo = r;
      psi_lo = m;
    } else {
      hi = r;
      psi_hi = m;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }

  // Newton polish on psi.  coeff is differenced numerically; the step is
  // accepted only when it stays bracketed and reduces the mismatch.
  for (int it = 0; it < 4 && !done(r, m) && out.evaluations + 2 < max_iter;
       ++it) {
    const double dr = std::max(1e-8 * r, 1e-300);
    const double dcf = (coeff(r + dr) - coeff(std::max(r - dr, r * 0.5))) /
                       (dr + std::min(dr, r * 0.5));
    const double cf = coeff(r);
    double num = 0.0, nrm2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double den = factor.lam[i] + cf;
      const double q = chat[i] / den;
      nrm2 += q * q;
      num += q * q / den;
    }
    const double n = std::sqrt(nrm2);
    if (!(n > 0.0)) break;
    const double dpsi = -dcf * num / n - 1.0;
    if (!(dpsi < 0.0)) break;
    const double cand = r - m / dpsi;
    if (!(cand > lo && cand < hi)) break;
    const double mc = psi(cand);
    if (std::abs(mc) >= std::abs(m)) break;
    r = cand;
    m = mc;
  }

  out.r = r;
  out.mismatch = std::abs(m);
  out.s = step_at(r);
  out.converged = done(r, m);
  return out;
}

namespace {

/* Shared epilogue: fills gradient norms and upgrades the status to
 * converged_relative when the relative criterion holds. */
void finish(SubsolveResult& res, const ModelState& state,
            const GradCallback& grad_f, bool solved) {
  const double d1 = state.deltas[1];
  const double r = res.step.norm();
  if (r == 0.0 && d1 > 0.0)
    res.model_grad_norm = std::max(0.0, state.g0.norm() - d1);
  else
    res.model_grad_norm = model_gradient(state, res.step).norm();
  res.status = solved ? SubsolveStatus::converged_absolute
                      : SubsolveStatus::max_iter;
  if (grad_f) {
    res.objective_grad_norm = grad_f(state.center + res.step).norm();
    const double ratio = 1.0 / (4.0 * state.p * (state.p + 1));
    if (solved && res.model_grad_norm <= ratio * res.objective_grad_norm)
      res.status = SubsolveStatus::converged_relative;
  }
}

}  // namespace

SubsolveResult solve_p1(const ModelState& state, const GradCallback& grad_f) {
  if (state.p != 1) throw DomainError("solve_p1: state.p != 1");
  if (!(state.H > 0.0)) throw DomainError("solve_p1: H must be positive");
  const double d1 = state.deltas[1];
  const double g0n = state.g0.norm();
  const int d = state.dimension();

  SubsolveResult res;
  res.step = Vector::Zero(d);
  if (g0n > d1) {
    if (!state.A) {
      // (H + delta_1 / r) s = -g0  =>  r = (||g0|| - delta_1) / H.
      res.step = -((g0n - d1) / (state.H * g0n)) * state.g0;
    } else {
      const EigenFactor factor = EigenFactor::decompose(*state.A);
      if (d1 == 0.0) {
        if (!(factor.lam[0] + state.H > 0.0))
          throw ModelConvexityError("solve_p1: composite makes model indefinite");
        const Vector chat = factor.U.transpose() * state.g0;
        Vector shat(d);
        for (int i = 0; i < d; ++i) shat[i] = -chat[i] / (factor.lam[i] + state.H);
        res.step = factor.U * shat;
      } else {
        const double H = state.H;
        RadialResult rr = radial_root_solve(
            factor, state.g0, [H, d1](double r) { return H + d1 / r; });
        res.step = rr.s;
        res.inner_iterations = rr.evaluations;
      }
    }
  }
  finish(res, state, grad_f, true);
  return res;
}

SubsolveResult solve_p2(const ModelState& state, const SubsolveOptions& opts,
                        const GradCallback& grad_f) {
  if (state.p != 2) throw DomainError("solve_p2: state.p != 2");
  if (!(state.H > 0.0)) throw DomainError("solve_p2: H must be positive");
  const double d1 = state.deltas[1];
  const double d2 = state.deltas[2];
  const double g0n = state.g0.norm();
  const int d = state.dimension();

  SubsolveResult res;
  res.step = Vector::Zero(d);
  bool solved = true;
  if (g0n > d1) {
    Matrix Aeff = *state.A;
    if (d2 > 0.0) Aeff += d2 * Matrix::Identity(d, d);
    const EigenFactor factor = EigenFactor::decompose(Aeff);
    // Gradient of the order-(p+1) power term is (p+1) C r^(p-1) s, which for
    // p = 2 is (H/2) r s (exact family) or H r s (error-aware family).
    const double slope = 3.0 * state.reg_coeff();
    RadialResult rr = radial_root_solve(
        factor, state.g0,
        [slope, d1](double r) {
          double v = slope * r;
          if (d1 > 0.0) v += d1 / r;
          return v;
        },
        opts.radial_tol, opts.max_iter > 0 ? 64 + 4 * opts.max_iter : 256);
    res.step = rr.s;
    res.inner_iterations = rr.evaluations;
    solved = rr.converged;
  }
  finish(res, state, grad_f, solved);
  return res;
}

SubsolveResult solve_p3_bdgm(const ModelState& state,
                             const SubsolveOptions& opts,
                             const GradCallback& grad_f) {
  if (state.p != 3) throw DomainError("solve_p3_bdgm: state.p != 3");
  if (!(state.H > 0.0)) throw DomainError("solve_p3_bdgm: H must be positive");
  if (!state.t3) throw DomainError("solve_p3_bdgm: state lacks a tensor action");
  const int d = state.dimension();
  const double d1 = state.deltas[1];
  const double d3 = state.deltas[3];
  const double Q4 = state.reg_coeff();  // quartic coefficient of the model
  const double LR = BdgmConstants::l_rho;
  const double rel = 1.0 / (4.0 * 3 * 4);  // 1/48

  Matrix Aeff = *state.A;
  if (state.deltas[2] > 0.0)
    Aeff += state.deltas[2] * Matrix::Identity(d, d);
  const EigenFactor factor = EigenFactor::decompose(Aeff);

  SubsolveResult res;
  Vector s = Vector::Zero(d);

  for (int t = 0;; ++t) {
    const double r = s.norm();
    // One tensor action per iteration; t3(0) = 0 is skipped outright.
    const Vector t3s = r > 0.0 ? state.t3(s) : Vector::Zero(d);
    Vector smooth = state.g0 + Aeff * s + 0.5 * t3s;
    if (d3 > 0.0) smooth += d3 * r * s;
    smooth += 4.0 * Q4 * r * r * s;

    double gnorm;
    if (r == 0.0 && d1 > 0.0)
      gnorm = std::max(0.0, state.g0.norm() - d1);
    else if (r == 0.0)
      gnorm = smooth.norm();
    else
      gnorm = d1 > 0.0 ? (smooth + (d1 / r) * s).norm() : smooth.norm();

    res.step = s;
    res.model_grad_norm = gnorm;
    res.inner_iterations = t;

    if (gnorm <= opts.tol_abs) {
      res.status = SubsolveStatus::converged_absolute;
      if (grad_f) {
        res.objective_grad_norm = grad_f(state.center + s).norm();
        if (gnorm <= rel * res.objective_grad_norm)
          res.status = SubsolveStatus::converged_relative;
      }
      return res;
    }
    const bool last = t >= opts.max_iter;
    if (grad_f && ((t > 0 && t % opts.check_every == 0) || last)) {
      res.objective_grad_norm = grad_f(state.center + s).norm();
      if (gnorm <= rel * res.objective_grad_norm) {
        res.status = SubsolveStatus::converged_relative;
        return res;
      }
    }
    if (last) {
      res.status = SubsolveStatus::max_iter;
      return res;
    }

    // Bregman step relative to rho(s) = 1/2 s'Aeff s + Q4 ||s||^4:
    // minimize <c_t, s> + delta_1 ||s|| + l_rho * rho(s).
    const Vector ct = smooth - LR * (Aeff * s + 4.0 * Q4 * r * r * s);
    if (ct.norm() <= d1) {
      s = Vector::Zero(d);
    } else {
      RadialResult rr = radial_root_solve(
          factor, ct / LR,
          [Q4, d1, LR](double rr_) {
            double v = 4.0 * Q4 * rr_ * rr_;
            if (d1 > 0.0) v += d1 / (LR * rr_);
            return v;
          },
          opts.radial_tol);
      s = rr.s;
    }
  }
}

SubsolveResult solve_model(const ModelState& state, const SubsolveOptions& opts,
                           const GradCallback& grad_f) {
  switch (state.p) {
    case 1:
      return solve_p1(state, grad_f);
    case 2:
      return solve_p2(state, opts, grad_f);
    case 3:
      return solve_p3_bdgm(state, opts, grad_f);
    default:
      throw DomainError("solve_model: unsupported order");
  }
}

}  // namespace tensoropt
