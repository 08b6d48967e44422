#pragma once

// Operators in tensor-train (matrix product operator) form: blocks of shape
// r_{k-1} x m_k x n_k x r_k acting on tensors with mode sizes n_k.

#include "ttchaos/errors.hpp"
#include "ttchaos/tensor3.hpp"
#include "ttchaos/tt_dense.hpp"
#include "ttchaos/tt_tensor.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ttchaos {

class TTOperator {
public:
  TTOperator() = default;

  explicit TTOperator(std::vector<Tensor4> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty())
      throw std::invalid_argument("TTOperator: at least one block required");
    for (std::size_t k = 0; k + 1 < blocks_.size(); ++k)
      if (blocks_[k].right_rank() != blocks_[k + 1].left_rank())
        throw std::invalid_argument("TTOperator: rank mismatch between blocks " +
                                    std::to_string(k) + " and " + std::to_string(k + 1));
    if (blocks_.front().left_rank() != 1 || blocks_.back().right_rank() != 1)
      throw std::invalid_argument("TTOperator: boundary ranks must be 1");
  }

  int order() const { return static_cast<int>(blocks_.size()); }
  const Tensor4& block(int k) const { return blocks_[k]; }
  Tensor4& block(int k) { return blocks_[k]; }

  std::vector<int> row_sizes() const {
    std::vector<int> n(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) n[k] = blocks_[k].row_size();
    return n;
  }
  std::vector<int> col_sizes() const {
    std::vector<int> n(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) n[k] = blocks_[k].col_size();
    return n;
  }
  std::vector<int> ranks() const {
    std::vector<int> r(blocks_.size() + 1);
    r[0] = 1;
    for (std::size_t k = 0; k < blocks_.size(); ++k) r[k + 1] = blocks_[k].right_rank();
    return r;
  }
  int max_rank() const {
    int m = 1;
    for (int r : ranks()) m = std::max(m, r);
    return m;
  }

  static TTOperator identity(const std::vector<int>& modes) {
    std::vector<Tensor4> blocks;
    for (int n : modes) {
      Tensor4 b(1, n, n, 1);
      for (int i = 0; i < n; ++i) b(0, i, i, 0) = 1.0;
      blocks.push_back(std::move(b));
    }
    return TTOperator(std::move(blocks));
  }

private:
  std::vector<Tensor4> blocks_;
};

// Matrix-vector product in TT form; ranks multiply bond-wise, no truncation.
inline TTTensor apply(const TTOperator& A, const TTTensor& u) {
  if (A.col_sizes() != u.mode_sizes())
    throw std::invalid_argument("apply: operator column sizes do not match tensor modes");
  const int M = u.order();
  std::vector<Tensor3> blocks;
  for (int k = 0; k < M; ++k) {
    const Tensor4& a = A.block(k);
    const Tensor3& x = u.block(k);
    const int ra0 = a.left_rank(), ra1 = a.right_rank();
    const int rx0 = x.left_rank(), rx1 = x.right_rank();
    Tensor3 y(ra0 * rx0, a.row_size(), ra1 * rx1);
    for (int sa = 0; sa < ra0; ++sa)
      for (int ta = 0; ta < ra1; ++ta) {
        const auto kern = a.kernel(sa, ta);  // rows x cols
        for (int sx = 0; sx < rx0; ++sx)
          for (int tx = 0; tx < rx1; ++tx) {
            // x(sx, :, tx) as a strided vector over the column mode
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

// Dense matrix of the operator, rows and columns flattened row-major over the
// per-mode row and column indices. Oracle path, guarded.
inline Eigen::MatrixXd operator_to_dense(const TTOperator& A) {
  const auto rows = A.row_sizes();
  const auto cols = A.col_sizes();
  std::size_t nr = 1, nc = 1;
  for (int n : rows) nr *= static_cast<std::size_t>(n);
  for (int n : cols) nc *= static_cast<std::size_t>(n);
  if (nr > kDenseGuard / nc)
    throw guard_error("operator_to_dense: dense size exceeds guard");
  // Densify as a tensor over the combined per-mode index (i_k, j_k), then
  // scatter into matrix layout.
  std::vector<Tensor3> combined;
  for (int k = 0; k < A.order(); ++k) combined.push_back(A.block(k).as_tensor3());
  Eigen::VectorXd flat = to_dense(TTTensor(std::move(combined)));
  Eigen::MatrixXd out(nr, nc);
  const int M = A.order();
  std::vector<int> ij(M, 0);
  for (Eigen::Index idx = 0; idx < flat.size(); ++idx) {
    std::size_t r = 0, c = 0;
    for (int k = 0; k < M; ++k) {
      r = r * rows[k] + ij[k] / cols[k];
      c = c * cols[k] + ij[k] % cols[k];
    }
    out(r, c) = flat[idx];
    for (int k = M - 1; k >= 0; --k) {
      if (++ij[k] < rows[k] * cols[k]) break;
      ij[k] = 0;
    }
  }
  return out;
}

// Discrete Laplace operator sum_k I x .. x A x .. x I with
// A = tridiag(-1, 2, -1) of size n, written with interior ranks 2.
inline TTOperator laplacian_tt(int dims, int n) {
  if (dims < 1 || n < 1) throw std::invalid_argument("laplacian_tt: bad sizes");
  auto fill_second_difference = [n](Tensor4& b, int s, int t) {
    for (int i = 0; i < n; ++i) {
      b(s, i, i, t) = 2.0;
      if (i > 0) b(s, i, i - 1, t) = -1.0;
      if (i + 1 < n) b(s, i, i + 1, t) = -1.0;
    }
  };
  auto fill_identity = [n](Tensor4& b, int s, int t) {
    for (int i = 0; i < n; ++i) b(s, i, i, t) = 1.0;
  };
  if (dims == 1) {
    Tensor4 b(1, n, n, 1);
    fill_second_difference(b, 0, 0);
    return TTOperator({std::move(b)});
  }
  std::vector<Tensor4> blocks;
  {
    Tensor4 b(1, n, n, 2);  // (A I)
    fill_second_difference(b, 0, 0);
    fill_identity(b, 0, 1);
    blocks.push_back(std::move(b));
  }
  for (int k = 1; k < dims - 1; ++k) {
    Tensor4 b(2, n, n, 2);  // rows (I 0 ; A I)
    fill_identity(b, 0, 0);
    fill_second_difference(b, 1, 0);
    fill_identity(b, 1, 1);
    blocks.push_back(std::move(b));
  }
  {
    Tensor4 b(2, n, n, 1);  // (I ; A)
    fill_identity(b, 0, 0);
    fill_second_difference(b, 1, 0);
    blocks.push_back(std::move(b));
  }
  return TTOperator(std::move(blocks));
}

}  // namespace ttchaos
