#pragma once

// Stochastic Galerkin assembly: deterministic stiffness matrices per expansion
// channel, the operator in TT (matrix product) form with ranks inherited from
// the coefficient train, a dense/sparse reference assembly for oracle use, and
// the rank-1 right-hand side.

#include "ttchaos/errors.hpp"
#include "ttchaos/fem.hpp"
#include "ttchaos/hermite.hpp"
#include "ttchaos/mesh.hpp"
#include "ttchaos/multi_index.hpp"
#include "ttchaos/tt_operator.hpp"
#include "ttchaos/tt_tensor.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ttchaos {

struct StiffnessSet {
  SpMat K0;                // mean-field stiffness, interior dofs
  std::vector<SpMat> K;    // per-mode stiffness K_1..K_L
  Eigen::VectorXd f0;      // deterministic load

  int mode_count() const { return static_cast<int>(K.size()); }
  int dof_count() const { return static_cast<int>(K0.rows()); }
  const SpMat& matrix(int ell) const { return ell == 0 ? K0 : K[ell - 1]; }
};

// fields: node_count x (L+1) nodal coefficient fields, column 0 the mean.
inline StiffnessSet build_stiffness_set(const TriMesh& mesh, const Eigen::MatrixXd& fields,
                                        const std::function<double(double, double)>& load) {
  if (fields.rows() != mesh.node_count())
    throw std::invalid_argument("build_stiffness_set: field rows do not match mesh nodes");
  if (fields.cols() < 1)
    throw std::invalid_argument("build_stiffness_set: need at least the mean column");
  StiffnessSet out;
  out.K0 = assemble_spatial(mesh, fields.col(0));
  for (int l = 1; l < fields.cols(); ++l)
    out.K.push_back(assemble_spatial(mesh, fields.col(l)));
  out.f0 = load_vector(mesh, load);
  return out;
}

// f0 tensor e_0 tensor ... tensor e_0: deterministic load, rank one.
inline TTTensor rhs_tt(const Eigen::VectorXd& f0, int param_modes, int p) {
  if (param_modes < 1 || p < 0) throw std::invalid_argument("rhs_tt: bad sizes");
  std::vector<Tensor3> blocks;
  Tensor3 b0(1, static_cast<int>(f0.size()), 1);
  for (int i = 0; i < f0.size(); ++i) b0(0, i, 0) = f0[i];
  blocks.push_back(std::move(b0));
  for (int m = 0; m < param_modes; ++m) {
    Tensor3 e(1, p + 1, 1);
    e(0, 0, 0) = 1.0;
    blocks.push_back(std::move(e));
  }
  return TTTensor(std::move(blocks));
}

inline TTTensor assemble_rhs(const TriMesh& mesh, const std::function<double(double, double)>& f,
                             int param_modes, int p) {
  return rhs_tt(load_vector(mesh, f), param_modes, p);
}

struct GalerkinSystemTT {
  TTOperator op;       // spatial block 0 with dense per-channel kernels, then M parametric blocks
  TTTensor rhs;        // f0 tensor e_0 chain
  StiffnessSet stiff;  // sparse originals, kept for the fast apply path
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> precond;  // factorization of K0

  int dof_count() const { return stiff.dof_count(); }
  int param_modes() const { return op.order() - 1; }
};

// Operator assembly from the coefficient train. kappa_tt carries the mean
// channel at boundary index 0, so its boundary rank is L+1 and the operator
// ranks equal the coefficient ranks exactly. The parametric block for mode m
// contracts the triple-product slices against the coefficient fibers:
// B(s,a,b,t) = sum_nu Delta(a,b,nu) kappa^{(m)}(s,nu,t).
inline GalerkinSystemTT assemble_operator_tt(const StiffnessSet& stiff, const TTTensor& kappa_tt,
                                             int p, const HermiteTools& delta) {
  const int M = kappa_tt.order();
  const int L = stiff.mode_count();
  const int N = stiff.dof_count();
  if (p < 0) throw config_error("assemble_operator_tt: negative solution order");
  if (delta.max_order() < p)
    throw config_error("assemble_operator_tt: triple-product table shorter than solution order");
  if (kappa_tt.boundary_rank() != L + 1)
    throw config_error("assemble_operator_tt: coefficient boundary rank " +
                       std::to_string(kappa_tt.boundary_rank()) + " != L+1 = " +
                       std::to_string(L + 1));
  for (int m = 0; m < M; ++m)
    if (kappa_tt.block(m).mode_size() > 2 * p + 1)
      throw config_error("assemble_operator_tt: coefficient mode size " +
                         std::to_string(kappa_tt.block(m).mode_size()) +
                         " exceeds triple-product range 2p+1 = " + std::to_string(2 * p + 1));
  if (N > 4096)
    throw guard_error("assemble_operator_tt: spatial block too large to store densely");

  std::vector<Tensor4> blocks;
  Tensor4 spatial(1, N, N, L + 1);
  for (int ell = 0; ell <= L; ++ell) {
    const SpMat& Kl = stiff.matrix(ell);
    for (int outer = 0; outer < Kl.outerSize(); ++outer)
      for (SpMat::InnerIterator it(Kl, outer); it; ++it)
        spatial(0, static_cast<int>(it.row()), static_cast<int>(it.col()), ell) = it.value();
  }
  blocks.push_back(std::move(spatial));

  for (int m = 0; m < M; ++m) {
    const Tensor3& kb = kappa_tt.block(m);
    Tensor4 B(kb.left_rank(), p + 1, p + 1, kb.right_rank());
    for (int s = 0; s < kb.left_rank(); ++s)
      for (int t = 0; t < kb.right_rank(); ++t) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p + 1, p + 1);
        for (int nu = 0; nu < kb.mode_size(); ++nu) {
          const double c = kb(s, nu, t);
          if (c != 0.0) acc += c * delta.triple_product_slice(nu).topLeftCorner(p + 1, p + 1);
        }
        for (int a = 0; a <= p; ++a)
          for (int b = 0; b <= p; ++b) B(s, a, b, t) = acc(a, b);
      }
    blocks.push_back(std::move(B));
  }

  GalerkinSystemTT sys;
  sys.op = TTOperator(std::move(blocks));
  sys.stiff = stiff;
  sys.rhs = rhs_tt(stiff.f0, M, p);
  sys.precond = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
  sys.precond->compute(stiff.K0);
  if (sys.precond->info() != Eigen::Success)
    throw convergence_error("assemble_operator_tt: K0 factorization failed");
  return sys;
}

// Evaluates the coefficient train on every multi-index of a set; row k holds
// the L+1 channel values at set.at(k), channel 0 being the mean indicator.
template <class IndexSet>
inline Eigen::MatrixXd coefficients_on_set(const TTTensor& kappa_tt, const IndexSet& set) {
  if (set.dims() != kappa_tt.order())
    throw std::invalid_argument("coefficients_on_set: set dimension mismatch");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(set.size()), kappa_tt.boundary_rank());
  for (std::size_t k = 0; k < set.size(); ++k)
    out.row(static_cast<Eigen::Index>(k)) = element(kappa_tt, set.at(k)).transpose();
  return out;
}

// Explicit reference assembly: block (a,b) of the N*#set matrix is
// sum_ell K_ell(i,j) * C_ell(a,b) with
// C_ell(a,b) = sum_{nu in nu_set} prod_m Delta(a_m,b_m,nu_m) * coeff(nu,ell).
// Rows are ordered with the spatial index slowest. Guarded oracle path.
template <class NuSet, class GalerkinSet>
inline SpMat assemble_operator_dense(const StiffnessSet& stiff, const Eigen::MatrixXd& kappa_coeff,
                                     const NuSet& nu_set, const GalerkinSet& galerkin_set,
                                     const HermiteTools& delta) {
  const int N = stiff.dof_count();
  const int L = stiff.mode_count();
  const int M = nu_set.dims();
  const std::size_t G = galerkin_set.size();
  if (galerkin_set.dims() != M)
    throw config_error("assemble_operator_dense: set dimensions disagree");
  if (kappa_coeff.rows() != static_cast<Eigen::Index>(nu_set.size()) ||
      kappa_coeff.cols() != L + 1)
    throw config_error("assemble_operator_dense: coefficient matrix shape mismatch");
  if (static_cast<std::size_t>(N) * G > 20000)
    throw guard_error("assemble_operator_dense: N * #set exceeds the reference-assembly guard");

  for (std::size_t k = 0; k < nu_set.size(); ++k)
    for (int v : nu_set.at(k))
      if (v > 2 * delta.max_order())
        throw config_error("assemble_operator_dense: nu order beyond triple-product table");
  for (std::size_t k = 0; k < G; ++k)
    for (int v : galerkin_set.at(k))
      if (v > delta.max_order())
        throw config_error("assemble_operator_dense: test order beyond triple-product table");

  std::vector<Eigen::MatrixXd> C(L + 1, Eigen::MatrixXd::Zero(G, G));
  std::vector<std::vector<int>> alphas(G);
  for (std::size_t k = 0; k < G; ++k) alphas[k] = galerkin_set.at(k);
  for (std::size_t k = 0; k < nu_set.size(); ++k) {
    const std::vector<int> nu = nu_set.at(k);
    Eigen::MatrixXd w = Eigen::MatrixXd::Ones(G, G);
    for (std::size_t ia = 0; ia < G; ++ia)
      for (std::size_t ib = 0; ib < G; ++ib) {
        double prod = 1.0;
        for (int m = 0; m < M; ++m) {
          prod *= delta.triple_product(alphas[ia][m], alphas[ib][m], nu[m]);
          if (prod == 0.0) break;
        }
        w(ia, ib) = prod;
      }
    for (int ell = 0; ell <= L; ++ell) {
      const double c = kappa_coeff(static_cast<Eigen::Index>(k), ell);
      if (c != 0.0) C[ell] += c * w;
    }
  }

  std::vector<Eigen::Triplet<double>> trip;
  for (int ell = 0; ell <= L; ++ell) {
    const SpMat& Kl = stiff.matrix(ell);
    for (int outer = 0; outer < Kl.outerSize(); ++outer)
      for (SpMat::InnerIterator it(Kl, outer); it; ++it)
        for (std::size_t a = 0; a < G; ++a)
          for (std::size_t b = 0; b < G; ++b) {
            const double v = it.value() * C[ell](a, b);
            if (v != 0.0)
              trip.emplace_back(static_cast<int>(it.row() * G + a),
                                static_cast<int>(it.col() * G + b), v);
          }
  }
  SpMat out(static_cast<int>(N * G), static_cast<int>(N * G));
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

// Right-hand side in the same flattened ordering as assemble_operator_dense.
template <class GalerkinSet>
inline Eigen::VectorXd rhs_dense(const StiffnessSet& stiff, const GalerkinSet& galerkin_set) {
  const std::size_t G = galerkin_set.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(stiff.dof_count() * static_cast<Eigen::Index>(G));
  const std::size_t zero = galerkin_set.index_of(std::vector<int>(galerkin_set.dims(), 0));
  for (int i = 0; i < stiff.dof_count(); ++i) out[i * G + zero] = stiff.f0[i];
  return out;
}

}  // namespace ttchaos
