#pragma once

// Preconditioned conjugate gradients carried out entirely in TT arithmetic:
// every apply/add is rounded, the preconditioner is the factorized mean-field
// stiffness acting on the spatial block only, and convergence is certified by
// a recomputed true residual.

#include "ttchaos/errors.hpp"
#include "ttchaos/galerkin.hpp"
#include "ttchaos/tt_round.hpp"
#include "ttchaos/tt_tensor.hpp"

#include <Eigen/Dense>

#include <cstdio>
#include <string>
#include <vector>

namespace ttchaos {

// Operator application using the sparse spatial matrices for block 0 and the
// assembled parametric kernels for the rest; identical result to the generic
// apply on sys.op, but avoids dense N x N matvecs.
inline TTTensor apply_system(const GalerkinSystemTT& sys, const TTTensor& u) {
  if (u.boundary_rank() != 1)
    throw std::invalid_argument("apply_system: expected boundary rank 1");
  if (sys.op.col_sizes() != u.mode_sizes())
    throw std::invalid_argument("apply_system: operator/tensor size mismatch");
  const int N = sys.dof_count();
  const int Lp1 = sys.stiff.mode_count() + 1;
  const Tensor3& x0 = u.block(0);
  const int r1 = x0.right_rank();

  std::vector<Tensor3> blocks;
  Tensor3 y0(1, N, Lp1 * r1);
  {
    Eigen::Map<const RowMat> U(x0.data(), N, r1);
    Eigen::Map<RowMat> Y(y0.data(), N, Lp1 * r1);
    for (int ell = 0; ell < Lp1; ++ell) Y.middleCols(ell * r1, r1) = sys.stiff.matrix(ell) * U;
  }
  blocks.push_back(std::move(y0));

  for (int m = 1; m < sys.op.order(); ++m) {
    const Tensor4& a = sys.op.block(m);
    const Tensor3& x = u.block(m);
    const int ra0 = a.left_rank(), ra1 = a.right_rank();
    const int rx0 = x.left_rank(), rx1 = x.right_rank();
    Tensor3 y(ra0 * rx0, a.row_size(), ra1 * rx1);
    for (int sa = 0; sa < ra0; ++sa)
      for (int ta = 0; ta < ra1; ++ta) {
        const auto kern = a.kernel(sa, ta);
        for (int sx = 0; sx < rx0; ++sx)
          for (int tx = 0; tx < rx1; ++tx) {
            Eigen::Map<const Eigen::VectorXd, Eigen::Unaligned, Eigen::InnerStride<>> xv(
                x.data() + static_cast<std::size_t>(sx) * x.mode_size() * rx1 + tx,
                x.mode_size(), Eigen::InnerStride<>(rx1));
            Eigen::VectorXd yv = kern * xv;
            for (int i = 0; i < a.row_size(); ++i) y(sa * rx0 + sx, i, ta * rx1 + tx) = yv[i];
          }
      }
    blocks.push_back(std::move(y));
  }
  return TTTensor(std::move(blocks));
}

// z = (K0^{-1} tensor I) r: back-substitution on every spatial fiber, rank
// structure untouched.
inline TTTensor apply_preconditioner(const GalerkinSystemTT& sys, const TTTensor& r) {
  TTTensor z = r;
  Tensor3& b = z.block(0);
  Eigen::Map<RowMat> U(b.data(), b.mode_size(), b.right_rank());
  U = sys.precond->solve(Eigen::MatrixXd(U)).eval();
  return z;
}

namespace detail {

// The parametric basis functions are not normalized: mode m carries squared
// norms a! on the diagonal of its mass matrix, so the mean-preconditioned
// spectrum is inflated by the largest basis norm (already 36x per mode at
// degree 3). Per-mode diagonal scalings 1/sqrt(a!) conjugate the system to
// the unit-norm basis; the conjugation is exact and leaves every TT rank
// untouched.
inline std::vector<Eigen::VectorXd> unit_norm_scaling(const TTOperator& op) {
  std::vector<Eigen::VectorXd> d(op.order() > 0 ? op.order() - 1 : 0);
  for (int m = 1; m < op.order(); ++m) {
    Eigen::VectorXd v(op.block(m).row_size());
    double fact = 1.0;
    for (int a = 0; a < v.size(); ++a) {
      if (a > 0) fact *= a;
      v[a] = 1.0 / std::sqrt(fact);
    }
    d[m - 1] = std::move(v);
  }
  return d;
}

// x <- (I (x) diag(d_1) (x) ... (x) diag(d_M)) x, a fiber scaling per block.
inline void scale_parametric_modes(TTTensor& x, const std::vector<Eigen::VectorXd>& d) {
  for (std::size_t m = 0; m < d.size(); ++m) {
    Tensor3& b = x.block(static_cast<int>(m) + 1);
    for (int s = 0; s < b.left_rank(); ++s)
      for (int a = 0; a < b.mode_size(); ++a)
        for (int t = 0; t < b.right_rank(); ++t) b(s, a, t) *= d[m][a];
  }
}

// A <- D A D with the same diagonal on both sides.
inline void scale_operator_modes(TTOperator& op, const std::vector<Eigen::VectorXd>& d) {
  for (int m = 1; m < op.order(); ++m) {
    Tensor4& B = op.block(m);
    for (int s = 0; s < B.left_rank(); ++s)
      for (int a = 0; a < B.row_size(); ++a)
        for (int b = 0; b < B.col_size(); ++b) {
          const double w = d[m - 1][a] * d[m - 1][b];
          for (int t = 0; t < B.right_rank(); ++t) B(s, a, b, t) *= w;
        }
  }
}

}  // namespace detail

struct SolveOptions {
  double eps = 1e-6;     // relative residual target
  int max_iter = 400;
  double round_eps = 0;  // rounding tolerance for every TT operation; 0 -> eps/10
  bool trace = false;    // per-iteration log to stderr
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  double final_residual = 0.0;        // true relative residual of the returned iterate
  std::vector<double> residuals;      // smoothed relative residual per iteration
  std::vector<int> max_ranks;         // solution max TT rank per iteration
};

// PCG generates the search directions; a minimal-residual smoothing step
// (Zhou/Walker style) combines the iterates so that the reported residual
// sequence is nonincreasing up to rounding, which the raw CG recurrence does
// not guarantee for the 2-norm.
//
// The recurrence runs on the unit-norm-basis conjugate D K D of the system
// (detail::unit_norm_scaling); the mean-field preconditioner acts on the
// spatial block only and commutes with the conjugation. Residual-scale
// quantities are rounded at a tolerance relative to the current residual
// level so their absolute fidelity stays pinned near (eps/10)|f|; a fixed
// relative tolerance would inflate the iterate ranks by a decade for every
// decade the residual drops. Convergence is certified on the original
// system: the candidate is mapped back and its true residual recomputed.
// The unscaled residual can exceed the recurrence residual by the largest
// basis norm, and the per-iteration iterate rounding leaves a floor under
// the unscaled residual amplified by the same factor, so a certificate
// shortfall tightens the working target and the iterate rounding together
// and restarts the recurrence from the certified residual.
inline TTTensor solve_tt(const GalerkinSystemTT& sys, const SolveOptions& opt,
                         SolveReport* report = nullptr) {
  SolveReport local;
  SolveReport& rep = report ? *report : local;
  rep = SolveReport{};

  const double round_eps = opt.round_eps > 0 ? opt.round_eps : opt.eps / 10.0;
  const double fnorm = norm(sys.rhs);
  if (fnorm == 0.0) {
    rep.converged = true;
    return TTTensor::zeros(sys.op.col_sizes());
  }

  const std::vector<Eigen::VectorXd> dvec = detail::unit_norm_scaling(sys.op);
  GalerkinSystemTT nsys = sys;
  detail::scale_operator_modes(nsys.op, dvec);
  detail::scale_parametric_modes(nsys.rhs, dvec);
  const double fnorm_s = norm(nsys.rhs);

  auto map_back = [&](const TTTensor& x) {
    TTTensor y = x;
    detail::scale_parametric_modes(y, dvec);
    return y;
  };

  double eps_work = opt.eps;      // recurrence target, tightened on certificate failure
  double work_round = round_eps;  // iterate rounding, tightened in lockstep
  double level = 1.0;             // latest smoothed relative residual
  auto relaxed = [&]() {
    const double floor_tol = std::min(work_round, eps_work / 10.0);
    return std::min(0.25, floor_tol / std::min(1.0, std::max(level, floor_tol)));
  };

  TTTensor u = TTTensor::zeros(sys.op.col_sizes());
  TTTensor r = nsys.rhs;  // CG recurrence residual
  TTTensor s = u;         // smoothed iterate (returned after mapping back)
  TTTensor t = r;         // residual of the smoothed iterate
  TTTensor z = apply_preconditioner(nsys, r);
  TTTensor p = z;
  double rz = dot(r, z);
  int shortfalls = 0;

  for (int it = 0; it < opt.max_iter; ++it) {
    TTTensor q = rounded(apply_system(nsys, p), relaxed());
    const double pq = dot(p, q);
    if (pq <= 0.0)
      throw convergence_error("solve_tt: p'Kp = " + std::to_string(pq) +
                              " <= 0, operator not positive definite");
    const double alpha = rz / pq;
    u = rounded(add(u, scale(p, alpha)), work_round);
    r = rounded(add(r, scale(q, -alpha)), relaxed());

    // line search t + eta (r - t): the minimum cannot exceed the eta = 0
    // endpoint, so |t| is nonincreasing up to the rounding perturbation
    TTTensor d = rounded(add(r, scale(t, -1.0)), relaxed());
    const double dd = dot(d, d);
    const double eta = dd > 0.0 ? -dot(t, d) / dd : 0.0;
    if (eta != 0.0) {
      t = rounded(add(t, scale(d, eta)), relaxed());
      s = rounded(add(s, scale(add(u, scale(s, -1.0)), eta)), work_round);
    }

    const double res = norm(t) / fnorm_s;
    level = res;
    rep.residuals.push_back(res);
    rep.max_ranks.push_back(s.max_rank());
    rep.iterations = it + 1;
    if (opt.trace)
      std::fprintf(stderr, "pcg it=%d res=%.3e rank=%d tol=%.1e\n", it + 1, res,
                   s.max_rank(), relaxed());

    if (res <= eps_work) {
      TTTensor cand = map_back(s);
      TTTensor rt = rounded(add(sys.rhs, scale(apply_system(sys, cand), -1.0)), work_round);
      const double true_res = norm(rt) / fnorm;
      if (opt.trace)
        std::fprintf(stderr, "pcg certificate it=%d true=%.3e target=%.3e\n", it + 1,
                     true_res, opt.eps);
      if (true_res <= opt.eps) {
        rep.converged = true;
        rep.final_residual = true_res;
        return cand;
      }
      if (++shortfalls >= 8) break;
      // basis-norm amplification of the mapped-back residual and of the
      // iterate rounding floor; restart from the certified residual with
      // both tolerances cut
      eps_work = std::max(eps_work / 4.0, opt.eps / 4096.0);
      work_round = round_eps * (eps_work / opt.eps);
      u = s;
      detail::scale_parametric_modes(rt, dvec);
      level = norm(rt) / fnorm_s;
      // the certified residual carries fine-scale rounding debris at high
      // rank; the recurrence only needs it to the relaxed tolerance, and the
      // full-rank version would blow the next operator product up by an
      // order of magnitude in memory
      r = rounded(rt, relaxed());
      t = r;
      z = apply_preconditioner(nsys, r);
      p = z;
      rz = dot(r, z);
      continue;
    }
    z = apply_preconditioner(nsys, r);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    p = rounded(add(z, scale(p, beta)), relaxed());
  }

  rep.converged = false;
  TTTensor out = map_back(s);
  rep.final_residual =
      norm(rounded(add(sys.rhs, scale(apply_system(sys, out), -1.0)), work_round)) / fnorm;
  return out;
}

}  // namespace ttchaos
