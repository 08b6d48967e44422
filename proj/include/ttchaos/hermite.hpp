#pragma once

// Probabilists' Hermite polynomials h_n under the standard Gaussian
// probability measure: <h_a, h_b> = a! delta_ab, with triple products and
// Gauss quadrature for that measure.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ttchaos {

class HermiteTools {
public:
  // max_order P: polynomials up to h_P; triple products Delta(a,b,nu) with
  // a,b <= P and nu <= 2P.
  explicit HermiteTools(int max_order) : order_(max_order) {
    if (max_order < 0) throw std::invalid_argument("HermiteTools: negative order");
    fact_.resize(2 * max_order + 2);
    fact_[0] = 1.0;
    for (std::size_t i = 1; i < fact_.size(); ++i) fact_[i] = fact_[i - 1] * double(i);
    delta_.resize(2 * max_order + 1);
    for (int nu = 0; nu <= 2 * max_order; ++nu) {
      Eigen::MatrixXd slice(max_order + 1, max_order + 1);
      for (int a = 0; a <= max_order; ++a)
        for (int b = 0; b <= max_order; ++b) slice(a, b) = triple_product(a, b, nu);
      delta_[nu] = std::move(slice);
    }
  }

  int max_order() const { return order_; }

  double factorial(int n) const {
    if (n < 0 || n >= static_cast<int>(fact_.size()))
      throw std::out_of_range("HermiteTools::factorial: out of tabulated range");
    return fact_[n];
  }

  // E[h_a h_b h_nu]; closed form: zero unless a+b+nu is even and the three
  // orders satisfy the triangle inequalities, else a!b!nu! / ((s-a)!(s-b)!(s-nu)!)
  // with s = (a+b+nu)/2.
  double triple_product(int a, int b, int nu) const {
    if (a < 0 || b < 0 || nu < 0) return 0.0;
    const int sum = a + b + nu;
    if (sum % 2 != 0) return 0.0;
    const int s = sum / 2;
    if (s < a || s < b || s < nu) return 0.0;
    return fact_at(a) * fact_at(b) * fact_at(nu) /
           (fact_at(s - a) * fact_at(s - b) * fact_at(s - nu));
  }

  const Eigen::MatrixXd& triple_product_slice(int nu) const {
    if (nu < 0 || nu >= static_cast<int>(delta_.size()))
      throw std::out_of_range("HermiteTools::triple_product_slice: order out of range");
    return delta_[nu];
  }

  static double evaluate(int n, double z) {
    if (n < 0) throw std::invalid_argument("HermiteTools::evaluate: negative order");
    double hm = 1.0;  // h_0
    if (n == 0) return hm;
    double h = z;  // h_1
    for (int i = 1; i < n; ++i) {
      const double next = z * h - i * hm;
      hm = h;
      h = next;
    }
    return h;
  }

  static Eigen::VectorXd evaluate_all(int p, double z) {
    Eigen::VectorXd h(p + 1);
    h[0] = 1.0;
    if (p >= 1) h[1] = z;
    for (int i = 1; i < p; ++i) h[i + 1] = z * h[i] - i * h[i - 1];
    return h;
  }

  // Nodes and weights integrating polynomials of degree <= 2n-1 exactly
  // against the standard Gaussian density (weights sum to 1). Golub-Welsch on
  // the Jacobi matrix with off-diagonal sqrt(i).
  static void gauss_quadrature(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    if (n < 1) throw std::invalid_argument("gauss_quadrature: need n >= 1");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
      const double b = std::sqrt(static_cast<double>(i));
      J(i, i - 1) = b;
      J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    nodes = es.eigenvalues();
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
      const double v = es.eigenvectors()(0, i);
      weights[i] = v * v;
    }
  }

private:
  double fact_at(int n) const { return fact_[n]; }

  int order_;
  std::vector<double> fact_;
  std::vector<Eigen::MatrixXd> delta_;
};

}  // namespace ttchaos
