#pragma once

// Tensor-train representation with an optional auxiliary index on the left
// boundary: blocks B_1..B_M of shape r_{k-1} x n_k x r_k, r_M = 1, and r_0
// may exceed 1 to carry a block of tensors sharing one decomposition.

#include "ttchaos/tensor3.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ttchaos {

class TTTensor {
public:
  TTTensor() = default;

  explicit TTTensor(std::vector<Tensor3> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty())
      throw std::invalid_argument("TTTensor: at least one block required");
    for (std::size_t k = 0; k + 1 < blocks_.size(); ++k)
      if (blocks_[k].right_rank() != blocks_[k + 1].left_rank())
        throw std::invalid_argument("TTTensor: rank mismatch between blocks " +
                                    std::to_string(k) + " and " + std::to_string(k + 1));
    if (blocks_.back().right_rank() != 1)
      throw std::invalid_argument("TTTensor: right boundary rank must be 1");
  }

  int order() const { return static_cast<int>(blocks_.size()); }
  int boundary_rank() const { return blocks_.front().left_rank(); }

  const Tensor3& block(int k) const { return blocks_[k]; }
  Tensor3& block(int k) { return blocks_[k]; }

  std::vector<int> mode_sizes() const {
    std::vector<int> n(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) n[k] = blocks_[k].mode_size();
    return n;
  }

  // r_0 .. r_M
  std::vector<int> ranks() const {
    std::vector<int> r(blocks_.size() + 1);
    r[0] = blocks_.front().left_rank();
    for (std::size_t k = 0; k < blocks_.size(); ++k) r[k + 1] = blocks_[k].right_rank();
    return r;
  }

  int max_rank() const {
    int m = 1;
    for (int r : ranks()) m = std::max(m, r);
    return m;
  }

  std::size_t storage_entries() const {
    std::size_t s = 0;
    for (const auto& b : blocks_) s += b.size();
    return s;
  }

  static TTTensor zeros(const std::vector<int>& modes, int boundary = 1) {
    std::vector<Tensor3> blocks;
    for (std::size_t k = 0; k < modes.size(); ++k)
      blocks.emplace_back(k == 0 ? boundary : 1, modes[k], 1);
    return TTTensor(std::move(blocks));
  }

  static TTTensor ones(const std::vector<int>& modes) {
    TTTensor u = zeros(modes);
    for (int k = 0; k < u.order(); ++k)
      for (int a = 0; a < u.block(k).mode_size(); ++a) u.block(k)(0, a, 0) = 1.0;
    return u;
  }

  // Rank-one tensor from per-mode factor vectors.
  static TTTensor rank_one(const std::vector<Eigen::VectorXd>& factors) {
    std::vector<Tensor3> blocks;
    for (const auto& f : factors) {
      Tensor3 b(1, static_cast<int>(f.size()), 1);
      for (int a = 0; a < f.size(); ++a) b(0, a, 0) = f[a];
      blocks.push_back(std::move(b));
    }
    return TTTensor(std::move(blocks));
  }

private:
  std::vector<Tensor3> blocks_;
};

// Deterministic standard normal samples from a 64-bit Mersenne engine via
// Box-Muller; keeps artifacts byte-identical across standard libraries.
class GaussianSampler {
public:
  explicit GaussianSampler(std::uint64_t seed) : eng_(seed) {}

  double operator()() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 1e-300);
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    cached_ = rad * std::sin(ang);
    have_ = true;
    return rad * std::cos(ang);
  }

  std::uint64_t integer() { return eng_(); }

  // Uniform draw from {0, .., n-1}.
  int uniform_int(int n) { return static_cast<int>(eng_() % static_cast<std::uint64_t>(n)); }

private:
  double uniform() {
    return (eng_() >> 11) * 0x1.0p-53;  // 53 random bits in [0,1)
  }

  std::mt19937_64 eng_;
  bool have_ = false;
  double cached_ = 0.0;
};

inline TTTensor random_tt(const std::vector<int>& modes, const std::vector<int>& ranks,
                          GaussianSampler& rng) {
  if (ranks.size() != modes.size() + 1)
    throw std::invalid_argument("random_tt: need order+1 ranks");
  if (ranks.back() != 1)
    throw std::invalid_argument("random_tt: right boundary rank must be 1");
  std::vector<Tensor3> blocks;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    Tensor3 b(ranks[k], modes[k], ranks[k + 1]);
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = rng();
    blocks.push_back(std::move(b));
  }
  return TTTensor(std::move(blocks));
}

inline TTTensor random_tt(const std::vector<int>& modes, int rank, GaussianSampler& rng) {
  std::vector<int> ranks(modes.size() + 1, rank);
  ranks.front() = 1;
  ranks.back() = 1;
  // Clamp to representable ranks of a plain tensor of these mode sizes.
  for (std::size_t k = 1; k < modes.size(); ++k) {
    double left = 1.0, right = 1.0;
    for (std::size_t i = 0; i < k; ++i) left = std::min(left * modes[i], 1e9);
    for (std::size_t i = k; i < modes.size(); ++i) right = std::min(right * modes[i], 1e9);
    ranks[k] = std::min<int>(ranks[k], static_cast<int>(std::min(left, right)));
  }
  return random_tt(modes, ranks, rng);
}

// Value of the tensor at a multi-index; returns one value per boundary slot.
inline Eigen::VectorXd element(const TTTensor& u, const std::vector<int>& alpha) {
  if (static_cast<int>(alpha.size()) != u.order())
    throw std::invalid_argument("element: index length does not match order");
  const int M = u.order();
  Eigen::VectorXd acc = Eigen::VectorXd::Ones(1);
  for (int k = M - 1; k >= 0; --k) {
    const auto& b = u.block(k);
    const int a = alpha[k];
    if (a < 0 || a >= b.mode_size())
      throw std::out_of_range("element: index out of range in mode " + std::to_string(k));
    acc = b.slice(a) * acc;
  }
  return acc;
}

inline double element_scalar(const TTTensor& u, const std::vector<int>& alpha) {
  Eigen::VectorXd v = element(u, alpha);
  if (v.size() != 1)
    throw std::invalid_argument("element_scalar: boundary rank exceeds 1");
  return v[0];
}

inline TTTensor scale(const TTTensor& u, double a) {
  TTTensor v = u;
  auto m = v.block(0).left_unfold();
  m *= a;
  return v;
}

// Sum of two tensor trains via the block-diagonal embedding; boundary blocks
// are concatenated so no rank slot is wasted at the ends.
inline TTTensor add(const TTTensor& u, const TTTensor& v) {
  if (u.mode_sizes() != v.mode_sizes())
    throw std::invalid_argument("add: mode sizes differ");
  if (u.boundary_rank() != v.boundary_rank())
    throw std::invalid_argument("add: boundary ranks differ");
  const int M = u.order();
  if (M == 1) {
    TTTensor w = u;
    auto m = w.block(0).left_unfold();
    m += v.block(0).left_unfold();
    return w;
  }
  std::vector<Tensor3> blocks;
  const auto ru = u.ranks(), rv = v.ranks();
  for (int k = 0; k < M; ++k) {
    const int n = u.block(k).mode_size();
    const int lu = ru[k], lv = rv[k], tu = ru[k + 1], tv = rv[k + 1];
    if (k == 0) {
      Tensor3 b(lu, n, tu + tv);
      for (int a = 0; a < n; ++a) {
        b.slice(a).leftCols(tu) = u.block(k).slice(a);
        b.slice(a).rightCols(tv) = v.block(k).slice(a);
      }
      blocks.push_back(std::move(b));
    } else if (k == M - 1) {
      Tensor3 b(lu + lv, n, 1);
      for (int a = 0; a < n; ++a) {
        b.slice(a).topRows(lu) = u.block(k).slice(a);
        b.slice(a).bottomRows(lv) = v.block(k).slice(a);
      }
      blocks.push_back(std::move(b));
    } else {
      Tensor3 b(lu + lv, n, tu + tv);
      for (int a = 0; a < n; ++a) {
        b.slice(a).topLeftCorner(lu, tu) = u.block(k).slice(a);
        b.slice(a).bottomRightCorner(lv, tv) = v.block(k).slice(a);
      }
      blocks.push_back(std::move(b));
    }
  }
  return TTTensor(std::move(blocks));
}

// Elementwise product; ranks multiply blockwise (Kronecker structure).
inline TTTensor hadamard(const TTTensor& u, const TTTensor& v) {
  if (u.mode_sizes() != v.mode_sizes())
    throw std::invalid_argument("hadamard: mode sizes differ");
  if (u.boundary_rank() != 1 || v.boundary_rank() != 1)
    throw std::invalid_argument("hadamard: requires boundary rank 1");
  const int M = u.order();
  std::vector<Tensor3> blocks;
  const auto ru = u.ranks(), rv = v.ranks();
  for (int k = 0; k < M; ++k) {
    const int n = u.block(k).mode_size();
    Tensor3 b(ru[k] * rv[k], n, ru[k + 1] * rv[k + 1]);
    for (int a = 0; a < n; ++a) {
      auto out = b.slice(a);
      const auto su = u.block(k).slice(a);
      const auto sv = v.block(k).slice(a);
      for (int i = 0; i < ru[k]; ++i)
        for (int j = 0; j < ru[k + 1]; ++j)
          out.block(i * rv[k], j * rv[k + 1], rv[k], rv[k + 1]) = su(i, j) * sv;
    }
    blocks.push_back(std::move(b));
  }
  return TTTensor(std::move(blocks));
}

// Inner products of all boundary-slot pairs, computed by sweeping interface
// Gram matrices from the right; never materializes the full tensors.
// Entry (i, j) equals <v_i, u_j> over the shared mode indices.
inline Eigen::MatrixXd dot_matrix(const TTTensor& v, const TTTensor& u) {
  if (u.mode_sizes() != v.mode_sizes())
    throw std::invalid_argument("dot: mode sizes differ");
  const int M = u.order();
  RowMat S = RowMat::Ones(1, 1);
  for (int k = M - 1; k >= 0; --k) {
    const auto& bv = v.block(k);
    const auto& bu = u.block(k);
    // W = v-left-unfold * S, reinterpreted with rows (s_{k-1}) and
    // columns (a, s_k(u)); row-major storage makes the reshape free.
    RowMat W = bv.left_unfold() * S;
    Eigen::Map<const RowMat> Wr(W.data(), bv.left_rank(),
                                static_cast<Eigen::Index>(bv.mode_size()) * S.cols());
    S = Wr * bu.right_unfold().transpose();
  }
  return S;
}

inline double dot(const TTTensor& v, const TTTensor& u) {
  Eigen::MatrixXd S = dot_matrix(v, u);
  if (S.size() != 1)
    throw std::invalid_argument("dot: boundary ranks exceed 1, use dot_matrix");
  return S(0, 0);
}

inline double norm(const TTTensor& u) {
  const double s = dot_matrix(u, u).trace();
  return std::sqrt(std::max(0.0, s));
}

}  // namespace ttchaos
