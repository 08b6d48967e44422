#pragma once

// Conversions between tensor trains and fully materialized arrays. These are
// oracle/debug paths: both directions refuse to build anything with more than
// kDenseGuard entries.

#include "ttchaos/errors.hpp"
#include "ttchaos/tt_tensor.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cstddef>
#include <string>
#include <vector>

namespace ttchaos {

inline constexpr std::size_t kDenseGuard = 10'000'000;

inline std::size_t dense_entry_count(const std::vector<int>& modes, int boundary = 1) {
  std::size_t total = boundary > 0 ? static_cast<std::size_t>(boundary) : 1;
  for (int n : modes) {
    if (n <= 0) throw std::invalid_argument("dense_entry_count: bad mode size");
    if (total > kDenseGuard / static_cast<std::size_t>(n) + 1) return kDenseGuard + 1;
    total *= static_cast<std::size_t>(n);
  }
  return total;
}

// Flattens to a vector indexed row-major over (boundary slot, a_1, .., a_M),
// i.e. the last mode index varies fastest.
inline Eigen::VectorXd to_dense(const TTTensor& u) {
  const auto modes = u.mode_sizes();
  const std::size_t total = dense_entry_count(modes, u.boundary_rank());
  if (total > kDenseGuard)
    throw guard_error("to_dense: refusing to materialize " + std::to_string(u.order()) +
                      "-way tensor with more than " + std::to_string(kDenseGuard) + " entries");
  RowMat P = RowMat::Identity(u.boundary_rank(), u.boundary_rank());
  for (int k = 0; k < u.order(); ++k) {
    const auto& b = u.block(k);
    RowMat next = P * b.right_unfold();  // rows x (mode*right)
    // Reinterpret rows (x) and columns (a, t) as rows (x, a) and columns t.
    P = Eigen::Map<const RowMat>(next.data(), next.rows() * b.mode_size(), b.right_rank());
  }
  return Eigen::Map<const Eigen::VectorXd>(P.data(), P.rows());
}

struct DenseShape {
  std::vector<int> modes;
  int boundary = 1;
  std::size_t flat_index(const std::vector<int>& alpha, int slot = 0) const {
    std::size_t idx = static_cast<std::size_t>(slot);
    for (std::size_t k = 0; k < modes.size(); ++k) idx = idx * modes[k] + alpha[k];
    return idx;
  }
};

// Sequential SVD compression of a fully stored tensor (boundary rank 1).
// Per-bond truncation threshold is eps/sqrt(M-1) relative to the input norm,
// so the result satisfies |dense - full(tt)|_F <= eps * |dense|_F with the
// minimal rank at every unfolding.
inline TTTensor tt_from_dense(const Eigen::VectorXd& data, const std::vector<int>& modes,
                              double eps) {
  if (modes.empty()) throw std::invalid_argument("tt_from_dense: no modes");
  const std::size_t total = dense_entry_count(modes);
  if (total > kDenseGuard)
    throw guard_error("tt_from_dense: input exceeds dense guard of " +
                      std::to_string(kDenseGuard) + " entries");
  if (static_cast<std::size_t>(data.size()) != total)
    throw std::invalid_argument("tt_from_dense: data length does not match mode sizes");
  const int M = static_cast<int>(modes.size());
  const double norm_all = data.norm();
  const double bond_eps = M > 1 ? eps / std::sqrt(static_cast<double>(M - 1)) : eps;
  const double budget = bond_eps * norm_all;  // allowed discarded norm per bond

  std::vector<Tensor3> blocks;
  RowMat rest = Eigen::Map<const RowMat>(data.data(), modes[0], data.size() / modes[0]);
  int left = 1;
  for (int k = 0; k < M - 1; ++k) {
    // rest has rows (s_{k-1}, a_k) and columns (a_{k+1}, .., a_M).
    Eigen::BDCSVD<Eigen::MatrixXd> svd(rest, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    int rank = static_cast<int>(sv.size());
    double tail = 0.0;
    while (rank > 1) {
      const double cand = tail + sv[rank - 1] * sv[rank - 1];
      if (cand > budget * budget) break;
      tail = cand;
      --rank;
    }
    Tensor3 b(left, modes[k], rank);
    Eigen::Map<RowMat>(b.data(), b.left_unfold().rows(), rank) = svd.matrixU().leftCols(rank);
    blocks.push_back(std::move(b));
    RowMat carry =
        sv.head(rank).asDiagonal() * svd.matrixV().leftCols(rank).transpose();
    // carry: rank x (a_{k+1}, .., a_M); regroup so a_{k+1} joins the rows.
    rest = Eigen::Map<const RowMat>(carry.data(), static_cast<Eigen::Index>(rank) * modes[k + 1],
                                    carry.cols() / modes[k + 1]);
    left = rank;
  }
  Tensor3 last(left, modes[M - 1], 1);
  Eigen::Map<RowMat>(last.data(), last.left_unfold().rows(), 1) =
      Eigen::Map<const Eigen::VectorXd>(rest.data(), rest.size());
  blocks.push_back(std::move(last));
  return TTTensor(std::move(blocks));
}

}  // namespace ttchaos
