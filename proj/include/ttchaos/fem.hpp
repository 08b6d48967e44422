#pragma once

// P1 finite elements on TriMesh: stiffness with piecewise-constant diffusion
// coefficient (centroid average of nodal values), consistent load by
// element-midpoint quadrature, and lumped-mass weights for discrete inner
// products on the full node set.

#include "ttchaos/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <stdexcept>
#include <vector>

namespace ttchaos {

using SpMat = Eigen::SparseMatrix<double>;

namespace detail {

// gradients of the three barycentric functions scaled by 2*area:
// grad lambda_i = (b_i, c_i) / (2A) with b_i = y_j - y_k, c_i = x_k - x_j
inline void p1_gradients(const TriMesh& mesh, int e, double b[3], double c[3], double& area) {
  const auto& t = mesh.elements[e];
  double x[3], y[3];
  for (int i = 0; i < 3; ++i) {
    x[i] = mesh.nodes(t[i], 0);
    y[i] = mesh.nodes(t[i], 1);
  }
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    b[i] = y[j] - y[k];
    c[i] = x[k] - x[j];
  }
  area = mesh.element_area(e);
}

inline SpMat stiffness_impl(const TriMesh& mesh, const Eigen::VectorXd& coeff, bool eliminate) {
  if (coeff.size() != mesh.node_count())
    throw std::invalid_argument("assemble_spatial: coefficient field size mismatch");
  const int dim = eliminate ? mesh.interior_count() : mesh.node_count();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.element_count() * 9);
  double b[3], c[3], area;
  for (int e = 0; e < mesh.element_count(); ++e) {
    p1_gradients(mesh, e, b, c, area);
    const auto& t = mesh.elements[e];
    const double ce = (coeff[t[0]] + coeff[t[1]] + coeff[t[2]]) / 3.0;
    for (int i = 0; i < 3; ++i) {
      const int gi = eliminate ? mesh.interior_index[t[i]] : t[i];
      if (gi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int gj = eliminate ? mesh.interior_index[t[j]] : t[j];
        if (gj < 0) continue;
        trips.emplace_back(gi, gj, ce * (b[i] * b[j] + c[i] * c[j]) / (4.0 * area));
      }
    }
  }
  SpMat K(dim, dim);
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

}  // namespace detail

// Stiffness over interior dofs, Dirichlet rows/cols eliminated.
inline SpMat assemble_spatial(const TriMesh& mesh, const Eigen::VectorXd& coeff) {
  return detail::stiffness_impl(mesh, coeff, true);
}

// Unconstrained stiffness over all nodes (row sums vanish).
inline SpMat assemble_spatial_full(const TriMesh& mesh, const Eigen::VectorXd& coeff) {
  return detail::stiffness_impl(mesh, coeff, false);
}

// Consistent P1 load with element-midpoint quadrature, interior dofs only.
inline Eigen::VectorXd load_vector(const TriMesh& mesh,
                                   const std::function<double(double, double)>& f) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.interior_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& t = mesh.elements[e];
    const double area = mesh.element_area(e);
    const double cx = (mesh.nodes(t[0], 0) + mesh.nodes(t[1], 0) + mesh.nodes(t[2], 0)) / 3.0;
    const double cy = (mesh.nodes(t[0], 1) + mesh.nodes(t[1], 1) + mesh.nodes(t[2], 1)) / 3.0;
    const double fc = f(cx, cy) * area / 3.0;
    for (int i = 0; i < 3; ++i) {
      const int gi = mesh.interior_index[t[i]];
      if (gi >= 0) out[gi] += fc;
    }
  }
  return out;
}

// Lumped-mass quadrature weights on the full node set: W(x) = sum of
// adjacent element areas / 3. Positive everywhere; sums to the domain area.
inline Eigen::VectorXd lumped_weights(const TriMesh& mesh) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(mesh.node_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const double share = mesh.element_area(e) / 3.0;
    for (int i = 0; i < 3; ++i) w[mesh.elements[e][i]] += share;
  }
  return w;
}

}  // namespace ttchaos
