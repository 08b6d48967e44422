#pragma once

// Quasi-maximum-volume row selection in a tall matrix: pivoted-LU seeding
// followed by greedy row swaps until no entry of A * A(I,:)^{-1} exceeds the
// stagnation tolerance in absolute value.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttchaos {

struct MaxvolInfo {
  int swaps = 0;
  double max_coefficient = 0.0;   // max |A * A(I,:)^{-1}| at termination
  double cond_estimate = 0.0;     // 1-norm condition estimate of A(I,:)
  bool hit_swap_cap = false;
};

inline std::vector<int> maxvol(const Eigen::MatrixXd& A, double tol = 1.01,
                               int max_swaps = 200, MaxvolInfo* info = nullptr) {
  const int n = static_cast<int>(A.rows());
  const int r = static_cast<int>(A.cols());
  if (n < r) throw std::invalid_argument("maxvol: matrix must have at least as many rows as columns");
  if (tol < 1.0) throw std::invalid_argument("maxvol: tolerance must be >= 1");

  // Seed with the rows chosen by column-by-column partial pivoting.
  Eigen::MatrixXd W = A;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  const double scale = A.cwiseAbs().maxCoeff();
  for (int j = 0; j < r; ++j) {
    int piv = j;
    double best = std::abs(W(j, j));
    for (int i = j + 1; i < n; ++i)
      if (std::abs(W(i, j)) > best) {
        best = std::abs(W(i, j));
        piv = i;
      }
    if (best <= 1e-14 * (scale > 0 ? scale : 1.0))
      throw std::runtime_error(
          "maxvol: matrix is numerically rank-deficient at column " + std::to_string(j) +
          "; reduce the requested rank");
    W.row(j).swap(W.row(piv));
    std::swap(perm[j], perm[piv]);
    for (int i = j + 1; i < n; ++i) {
      const double f = W(i, j) / W(j, j);
      W(i, j) = 0.0;
      for (int c = j + 1; c < r; ++c) W(i, c) -= f * W(j, c);
    }
  }
  std::vector<int> rows(perm.begin(), perm.begin() + r);

  Eigen::MatrixXd sub(r, r);
  Eigen::MatrixXd B(n, r);
  int swaps = 0;
  double worst = 0.0;
  bool capped = false;
  while (true) {
    for (int j = 0; j < r; ++j) sub.row(j) = A.row(rows[j]);
    // B = A * sub^{-1} via an LU solve on the transposed system
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sub.transpose());
    B = lu.solve(A.transpose()).transpose();
    int bi = 0, bj = 0;
    worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < r; ++j)
        if (std::abs(B(i, j)) > worst) {
          worst = std::abs(B(i, j));
          bi = i;
          bj = j;
        }
    if (worst <= tol) break;
    if (swaps >= max_swaps) {
      capped = true;
      break;
    }
    rows[bj] = bi;  // swapping in row bi grows |det| by the factor |B(bi,bj)|
    ++swaps;
  }

  if (info) {
    info->swaps = swaps;
    info->max_coefficient = worst;
    info->hit_swap_cap = capped;
    for (int j = 0; j < r; ++j) sub.row(j) = A.row(rows[j]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sub);
    const double inv_norm = lu.inverse().cwiseAbs().colwise().sum().maxCoeff();
    const double norm = sub.cwiseAbs().colwise().sum().maxCoeff();
    info->cond_estimate = inv_norm * norm;
  }
  return rows;
}

}  // namespace ttchaos
