#pragma once

// Orthogonalization sweeps and SVD-based rank truncation for tensor trains.

#include "ttchaos/tt_tensor.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace ttchaos {

enum class Direction { Left, Right };

namespace detail {

// Thin QR; returns {Q (rows x k), R (k x cols)} with k = min(rows, cols).
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> thin_qr(const Eigen::MatrixXd& A) {
  const Eigen::Index k = std::min(A.rows(), A.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(A.rows(), k);
  Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return {std::move(Q), std::move(R)};
}

}  // namespace detail

// One full QR sweep. Direction::Left makes every block except the last have
// orthonormal columns in its left unfolding (norm carried to the last block);
// Direction::Right mirrors this with orthonormal rows in right unfoldings and
// the norm carried to the first block. Ranks can only shrink.
inline TTTensor orthogonalized(const TTTensor& u, Direction dir) {
  const int M = u.order();
  std::vector<Tensor3> blocks;
  blocks.reserve(M);
  for (int k = 0; k < M; ++k) blocks.push_back(u.block(k));
  if (dir == Direction::Left) {
    for (int k = 0; k < M - 1; ++k) {
      auto [Q, R] = detail::thin_qr(blocks[k].left_unfold());
      const int rank = static_cast<int>(Q.cols());
      Tensor3 nb(blocks[k].left_rank(), blocks[k].mode_size(), rank);
      nb.left_unfold() = Q;
      RowMat carried = R * blocks[k + 1].right_unfold();
      Tensor3 nn(rank, blocks[k + 1].mode_size(), blocks[k + 1].right_rank());
      nn.right_unfold() = carried;
      blocks[k] = std::move(nb);
      blocks[k + 1] = std::move(nn);
    }
  } else {
    for (int k = M - 1; k > 0; --k) {
      auto [Q, R] = detail::thin_qr(blocks[k].right_unfold().transpose());
      const int rank = static_cast<int>(Q.cols());
      Tensor3 nb(rank, blocks[k].mode_size(), blocks[k].right_rank());
      nb.right_unfold() = Q.transpose();
      RowMat carried = blocks[k - 1].left_unfold() * R.transpose();
      Tensor3 np(blocks[k - 1].left_rank(), blocks[k - 1].mode_size(), rank);
      np.left_unfold() = carried;
      blocks[k] = std::move(nb);
      blocks[k - 1] = std::move(np);
    }
  }
  return TTTensor(std::move(blocks));
}

struct TruncationReport {
  struct Bond {
    std::vector<double> kept;
    std::vector<double> discarded;
  };
  std::vector<Bond> bonds;          // bond k sits between blocks k and k+1
  std::vector<int> ranks;           // resulting r_0 .. r_M
  double relative_error_bound = 0;  // sqrt(sum of discarded energy) / norm
};

// Rank truncation: left-orthogonalize, then sweep right-to-left with SVDs,
// keeping at each bond the minimal rank whose discarded singular energy stays
// within that bond's share of the budget. With the default split every bond
// gets eps/sqrt(M-1), which bounds the total relative error by eps.
inline std::pair<TTTensor, TruncationReport> round_tt(const TTTensor& u,
                                                      const std::vector<double>& bond_eps,
                                                      int max_rank = 0) {
  const int M = u.order();
  TruncationReport rep;
  if (M == 1 || u.max_rank() == 1) {
    rep.ranks = u.ranks();
    return {u, rep};
  }
  if (static_cast<int>(bond_eps.size()) != M - 1)
    throw std::invalid_argument("round_tt: need one tolerance per bond");

  TTTensor w = orthogonalized(u, Direction::Left);
  const double norm_u = w.block(M - 1).left_unfold().norm();
  if (norm_u == 0.0) {
    TTTensor z = TTTensor::zeros(u.mode_sizes(), u.boundary_rank());
    rep.ranks = z.ranks();
    return {z, rep};
  }

  rep.bonds.resize(M - 1);
  double discarded_total = 0.0;
  for (int k = M - 1; k > 0; --k) {
    Eigen::MatrixXd A = w.block(k).right_unfold();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double total_energy = sv.squaredNorm();
    const double budget = bond_eps[k - 1] * bond_eps[k - 1] * total_energy;
    int rank = static_cast<int>(sv.size());
    double tail = 0.0;
    while (rank > 1) {
      const double cand = tail + sv[rank - 1] * sv[rank - 1];
      if (cand > budget) break;
      tail = cand;
      --rank;
    }
    if (max_rank > 0 && rank > max_rank) {
      for (int j = max_rank; j < rank; ++j) tail += sv[j] * sv[j];
      rank = max_rank;
    }
    auto& bond = rep.bonds[k - 1];
    bond.kept.assign(sv.data(), sv.data() + rank);
    bond.discarded.assign(sv.data() + rank, sv.data() + sv.size());
    discarded_total += tail;

    Tensor3 nb(rank, w.block(k).mode_size(), w.block(k).right_rank());
    nb.right_unfold() = svd.matrixV().leftCols(rank).transpose();
    RowMat carried = w.block(k - 1).left_unfold() *
                     (svd.matrixU().leftCols(rank) * sv.head(rank).asDiagonal());
    Tensor3 np(w.block(k - 1).left_rank(), w.block(k - 1).mode_size(), rank);
    np.left_unfold() = carried;
    w.block(k) = std::move(nb);
    w.block(k - 1) = std::move(np);
  }
  rep.ranks = w.ranks();
  rep.relative_error_bound = std::sqrt(discarded_total) / norm_u;
  return {std::move(w), rep};
}

inline std::pair<TTTensor, TruncationReport> round_tt(const TTTensor& u, double eps,
                                                      int max_rank = 0) {
  const int M = u.order();
  const double per_bond = M > 1 ? eps / std::sqrt(static_cast<double>(M - 1)) : eps;
  return round_tt(u, std::vector<double>(std::max(1, M - 1), per_bond), max_rank);
}

inline TTTensor rounded(const TTTensor& u, double eps, int max_rank = 0) {
  return round_tt(u, eps, max_rank).first;
}

}  // namespace ttchaos
