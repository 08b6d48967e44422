#pragma once

// Discrete Karhunen-Loeve decomposition of a covariance matrix with respect
// to a weighted inner product <u, v>_W = sum_x W(x) u(x) v(x).

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ttchaos {

struct EigenPairs {
  Eigen::VectorXd values;   // descending, nonnegative
  Eigen::MatrixXd vectors;  // columns, W-orthonormal
};

// Solves C W v = lambda v via the symmetric form B = W^{1/2} C W^{1/2},
// returning the leading `count` pairs. Eigenvalues slightly negative from
// roundoff are clipped; anything below -1e-10 * lambda_max is an error.
inline EigenPairs discrete_kle(const Eigen::MatrixXd& cov, const Eigen::VectorXd& weights,
                               int count) {
  const Eigen::Index n = cov.rows();
  if (cov.cols() != n) throw std::invalid_argument("discrete_kle: covariance must be square");
  if (weights.size() != n)
    throw std::invalid_argument("discrete_kle: weight vector size mismatch");
  if (count < 1 || count > n)
    throw std::invalid_argument("discrete_kle: requested mode count out of range");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(weights[i] > 0)) throw std::invalid_argument("discrete_kle: weights must be positive");

  const Eigen::VectorXd ws = weights.array().sqrt();
  Eigen::MatrixXd B = ws.asDiagonal() * cov * ws.asDiagonal();
  B = 0.5 * (B + B.transpose());  // enforce symmetry
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("discrete_kle: eigensolver failed");

  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const double lam_max = std::max(0.0, ev[n - 1]);
  if (ev[0] < -1e-10 * std::max(lam_max, 1.0)) {
    std::ostringstream os;
    os << "discrete_kle: covariance is indefinite, smallest eigenvalue " << ev[0];
    throw std::runtime_error(os.str());
  }

  EigenPairs out;
  out.values.resize(count);
  out.vectors.resize(n, count);
  for (int k = 0; k < count; ++k) {
    const Eigen::Index src = n - 1 - k;
    out.values[k] = std::max(0.0, ev[src]);
    Eigen::VectorXd v = es.eigenvectors().col(src).cwiseQuotient(ws);
    // deterministic sign: largest-magnitude component positive
    Eigen::Index imax;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;
    out.vectors.col(k) = v;
  }
  return out;
}

}  // namespace ttchaos
