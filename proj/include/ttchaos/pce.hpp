#pragma once

// Polynomial chaos expansion of a transformed Gaussian field: entrywise
// coefficient evaluator for cross sampling, direct (sparse-set) evaluation,
// and assembly of the full coefficient train with the mean channel.

#include "ttchaos/block_cross.hpp"
#include "ttchaos/errors.hpp"
#include "ttchaos/kle.hpp"
#include "ttchaos/multi_index.hpp"
#include "ttchaos/tensor3.hpp"
#include "ttchaos/transform.hpp"
#include "ttchaos/tt_tensor.hpp"

#include <Eigen/Dense>

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace ttchaos {

// Discrete expansion data of the random field kappa(x, omega):
//   kappa = mean(x) + sum_l v_l(x) kappa_l(omega),
// where the Gaussian argument gamma = sum_m g_m(x) z_m.
struct KleBasis {
  Eigen::VectorXd weights;      // spatial inner-product weights W(x)
  Eigen::VectorXd mean;         // mean field at the nodes
  Eigen::MatrixXd field_modes;  // v_l columns, W-orthonormal (N x L)
  Eigen::VectorXd field_values; // eigenvalues of the field covariance
  Eigen::MatrixXd gauss_modes;  // g_m columns with sqrt(eigenvalue) absorbed (N x M)
  Eigen::VectorXd gauss_values; // eigenvalues of the Gaussian covariance

  int nodes() const { return static_cast<int>(weights.size()); }
  int field_count() const { return static_cast<int>(field_modes.cols()); }
  int gauss_count() const { return static_cast<int>(gauss_modes.cols()); }

  void validate() const {
    const Eigen::Index n = weights.size();
    if (mean.size() != n || field_modes.rows() != n || gauss_modes.rows() != n)
      throw std::invalid_argument("KleBasis: inconsistent node counts");
    if (field_values.size() != field_modes.cols() || gauss_values.size() != gauss_modes.cols())
      throw std::invalid_argument("KleBasis: inconsistent eigenvalue counts");
  }
};

// Hermite coefficients of the expanded field for explicitly listed indices:
// row per alpha, column per field mode l;
//   coeff_alpha(l) = (|alpha|! / prod alpha_m!) phi_{|alpha|} <prod_m g_m^{alpha_m}, v_l>_W.
// Orders beyond the transform order are exact zeros (warned once per call
// via the optional flag).
inline Eigen::MatrixXd pce_coefficients(const KleBasis& kle, const TransformPhi& phi,
                                        const std::vector<std::vector<int>>& alphas,
                                        bool* truncated_orders = nullptr) {
  kle.validate();
  const int L = kle.field_count();
  const int M = kle.gauss_count();
  const int Q = phi.order;
  std::vector<double> fact(Q + 1);
  fact[0] = 1.0;
  for (int i = 1; i <= Q; ++i) fact[i] = fact[i - 1] * i;

  Eigen::MatrixXd wV =
      kle.weights.asDiagonal() * kle.field_modes;  // N x L, projection weights
  Eigen::MatrixXd out(alphas.size(), L);
  Eigen::VectorXd w(kle.nodes());
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const auto& alpha = alphas[i];
    if (static_cast<int>(alpha.size()) != M)
      throw std::invalid_argument("pce_coefficients: index dimension mismatch");
    long total = 0;
    for (int a : alpha) {
      if (a < 0) throw std::invalid_argument("pce_coefficients: negative index component");
      total += a;
    }
    if (total > Q) {
      if (truncated_orders) *truncated_orders = true;
      out.row(i).setZero();
      continue;
    }
    w.setOnes();
    double denom = 1.0;
    for (int m = 0; m < M; ++m) {
      for (int rep = 0; rep < alpha[m]; ++rep) w.array() *= kle.gauss_modes.col(m).array();
      denom *= fact[alpha[m]];
    }
    const double scale = fact[total] / denom * phi.coeffs[static_cast<int>(total)];
    out.row(i) = scale * (w.transpose() * wV);
  }
  return out;
}

// Batch evaluator over the full grid J = {0..limits[0]} x .. for cross
// interpolation; outputs one column per field mode.
inline TensorEvaluator pce_entry_evaluator(const KleBasis& kle, const TransformPhi& phi,
                                           const std::vector<int>& order_limits) {
  kle.validate();
  if (static_cast<int>(order_limits.size()) != kle.gauss_count())
    throw std::invalid_argument("pce_entry_evaluator: one order limit per Gaussian mode required");
  TensorEvaluator ev;
  ev.mode_sizes.reserve(order_limits.size());
  for (int l : order_limits) {
    if (l < 0) throw std::invalid_argument("pce_entry_evaluator: negative order limit");
    ev.mode_sizes.push_back(l + 1);
  }
  ev.outputs = kle.field_count();
  auto warned = std::make_shared<bool>(false);
  ev.eval = [kle, phi, warned](const std::vector<std::vector<int>>& idx) {
    bool truncated = false;
    Eigen::MatrixXd vals = pce_coefficients(kle, phi, idx, &truncated);
    if (truncated && !*warned) {
      *warned = true;
      std::fprintf(stderr,
                   "pce_entry_evaluator: indices beyond the transform order %d are exact zeros\n",
                   phi.order);
    }
    return vals;
  };
  return ev;
}

// Prepends an l=0 channel to a coefficient train: the new channel carries
// delta_{alpha,0} so the mean term attaches only to the zero multi-index.
// Boundary rank grows L -> L+1, interior ranks by one.
inline TTTensor with_mean_channel(const TTTensor& coeff) {
  const int M = coeff.order();
  std::vector<Tensor3> blocks;
  blocks.reserve(M);
  for (int k = 0; k < M; ++k) {
    const Tensor3& b = coeff.block(k);
    const int rw = b.right_rank();
    const int right = k == M - 1 ? 1 : rw + 1;
    Tensor3 nb(b.left_rank() + 1, b.mode_size(), right);
    nb(0, 0, 0) = 1.0;  // mean channel carries delta_{alpha,0}
    for (int s = 0; s < b.left_rank(); ++s)
      for (int a = 0; a < b.mode_size(); ++a)
        for (int t = 0; t < rw; ++t) {
          if (k == M - 1 && t > 0) continue;  // unreachable: last right rank is 1
          nb(s + 1, a, k == M - 1 ? 0 : t + 1) += b(s, a, t);
        }
    blocks.push_back(std::move(nb));
  }
  return TTTensor(std::move(blocks));
}

// Attaches the spatial block and the mean channel to a coefficient train
// produced by cross interpolation (left boundary rank = field mode count).
// Result: M+1 blocks, mode 0 spatial of size N, boundary ranks 1, and
//   value(x, alpha) = mean(x) delta_{alpha,0} + sum_l v_l(x) coeff_alpha(l).
inline TTTensor build_kappa_tt(const TTTensor& coeff, const KleBasis& kle) {
  kle.validate();
  const int L = kle.field_count();
  if (coeff.boundary_rank() != L)
    throw std::invalid_argument(
        "build_kappa_tt: coefficient boundary rank must equal the field mode count");
  const int N = kle.nodes();

  TTTensor param = with_mean_channel(coeff);
  std::vector<Tensor3> blocks;
  Tensor3 spatial(1, N, L + 1);
  for (int x = 0; x < N; ++x) {
    spatial(0, x, 0) = kle.mean[x];
    for (int l = 0; l < L; ++l) spatial(0, x, l + 1) = kle.field_modes(x, l);
  }
  blocks.push_back(std::move(spatial));
  for (int k = 0; k < param.order(); ++k) blocks.push_back(std::move(param.block(k)));
  return TTTensor(std::move(blocks));
}

// Direct dense-path expansion over a sparse index set: row i of the result
// is the full spatial coefficient kappa_{alpha_i}(x) including the mean.
inline Eigen::MatrixXd sparse_pce_direct(const KleBasis& kle, const TransformPhi& phi,
                                         const SparseIndexSet& set) {
  if (set.size() > 1'000'000)
    throw guard_error("sparse_pce_direct: index set exceeds 1e6 entries");
  Eigen::MatrixXd coeff = pce_coefficients(kle, phi, set.all());
  Eigen::MatrixXd out = coeff * kle.field_modes.transpose();  // (#set x N)
  for (std::size_t i = 0; i < set.size(); ++i) {
    bool zero = true;
    for (int a : set.at(i)) zero = zero && a == 0;
    if (zero) out.row(i) += kle.mean.transpose();
  }
  return out;
}

}  // namespace ttchaos
