#pragma once

// Pointwise transform phi of a standard Gaussian variable and its Hermite
// expansion phi(z) = sum_i phi_i h_i(z), with phi_i = <phi, h_i> / i!.

#include "ttchaos/hermite.hpp"
#include "ttchaos/special_functions.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>

namespace ttchaos {

struct TransformPhi {
  int order = 0;                       // highest retained Hermite order Q
  Eigen::VectorXd coeffs;              // phi_0 .. phi_Q
  std::function<double(double)> phi;   // the exact pointwise map
  int quadrature_points = 0;
  double second_moment = 0.0;          // E[phi(Z)^2] from quadrature
  double coefficient_check = 0.0;      // max |coeff - refined-grid coeff|
  bool quadrature_converged = true;

  double value(double z) const { return phi(z); }

  double series_value(double z) const {
    const Eigen::VectorXd h = HermiteTools::evaluate_all(order, z);
    return coeffs.dot(h);
  }

  // Var[phi(Z)] of the truncated expansion: sum_{i>=1} i! phi_i^2.
  double series_variance() const {
    double v = 0.0, f = 1.0;
    for (int i = 1; i <= order; ++i) {
      f *= i;
      v += f * coeffs[i] * coeffs[i];
    }
    return v;
  }

  // Truncation tail indicator: i! phi_i^2 for the last retained order,
  // relative to the series variance.
  double tail_indicator() const {
    if (order < 1) return 0.0;
    double f = 1.0;
    for (int i = 1; i <= order; ++i) f *= i;
    const double var = series_variance();
    return var > 0 ? f * coeffs[order] * coeffs[order] / var : 0.0;
  }
};

// Projects phi onto Hermite polynomials up to order Q with Gauss quadrature
// sized generously (>= 4Q points) and verifies stability against a refined
// grid; a mismatch flags quadrature_converged rather than failing.
inline TransformPhi transform_coeffs(std::function<double(double)> phi, int Q) {
  if (Q < 0) throw std::invalid_argument("transform_coeffs: negative order");
  TransformPhi out;
  out.order = Q;
  out.phi = phi;
  const int n = std::max(4 * Q + 4, 40);
  out.quadrature_points = n;

  auto project = [&](int pts) {
    Eigen::VectorXd nodes, weights;
    HermiteTools::gauss_quadrature(pts, nodes, weights);
    Eigen::VectorXd moments = Eigen::VectorXd::Zero(Q + 1);
    double second = 0.0;
    for (int q = 0; q < pts; ++q) {
      const double v = phi(nodes[q]);
      const Eigen::VectorXd h = HermiteTools::evaluate_all(Q, nodes[q]);
      moments += weights[q] * v * h;
      second += weights[q] * v * v;
    }
    double f = 1.0;
    for (int i = 0; i <= Q; ++i) {
      if (i > 0) f *= i;
      moments[i] /= f;
    }
    return std::make_pair(moments, second);
  };

  auto [coeffs, second] = project(n);
  auto [refined, second2] = project(2 * n);
  out.coeffs = coeffs;
  out.second_moment = second;
  out.coefficient_check = (coeffs - refined).cwiseAbs().maxCoeff();
  const double scale = coeffs.cwiseAbs().maxCoeff();
  out.quadrature_converged = out.coefficient_check <= 1e-8 * (1.0 + scale);
  return out;
}

// phi(z) = shift + F_beta^{-1}(Phi(z)) for Beta(a, b) marginals.
inline TransformPhi beta_marginal_transform(double a, double b, double shift, int Q) {
  auto phi = [a, b, shift](double z) { return shift + inv_beta_cdf(a, b, std_normal_cdf(z)); };
  return transform_coeffs(phi, Q);
}

}  // namespace ttchaos
