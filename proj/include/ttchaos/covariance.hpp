#pragma once

// Covariance kernels on point sets and the entrywise inversion that maps a
// target field covariance to the covariance of the underlying Gaussian.

#include "ttchaos/transform.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ttchaos {

enum class CovarianceFamily { Gaussian, Exponential };

inline CovarianceFamily covariance_family_from_string(const std::string& s) {
  if (s == "gaussian") return CovarianceFamily::Gaussian;
  if (s == "exponential") return CovarianceFamily::Exponential;
  throw std::invalid_argument("unknown covariance family: " + s);
}

// Correlation matrix rho(x_i, x_j) over rows of `points`.
inline Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& points,
                                          CovarianceFamily family, double sigma) {
  if (sigma <= 0) throw std::invalid_argument("correlation_matrix: sigma must be positive");
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd C(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    C(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (points.row(i) - points.row(j)).norm();
      const double v = family == CovarianceFamily::Gaussian
                           ? std::exp(-(d * d) / (sigma * sigma))
                           : std::exp(-d / sigma);
      C(i, j) = v;
      C(j, i) = v;
    }
  }
  return C;
}

// Solves sum_{i=1..Q} i! phi_i^2 c^i = target entrywise for c in [-1, 1].
// The diagonal of cov must match the series variance of phi (the polynomial's
// value at c = 1) up to a small relative tolerance.
inline Eigen::MatrixXd gamma_covariance(const Eigen::MatrixXd& cov,
                                                   const TransformPhi& phi) {
  if (cov.rows() != cov.cols())
    throw std::invalid_argument("gamma_covariance: covariance must be square");
  const int Q = phi.order;
  Eigen::VectorXd w(Q + 1);  // w_i = i! phi_i^2, w_0 unused
  w[0] = 0.0;
  double f = 1.0;
  for (int i = 1; i <= Q; ++i) {
    f *= i;
    w[i] = f * phi.coeffs[i] * phi.coeffs[i];
  }
  auto g = [&](double c) {
    double acc = 0.0, p = 1.0;
    for (int i = 1; i <= Q; ++i) {
      p *= c;
      acc += w[i] * p;
    }
    return acc;
  };
  auto gprime = [&](double c) {
    double acc = 0.0, p = 1.0;
    for (int i = 1; i <= Q; ++i) {
      acc += i * w[i] * p;
      p *= c;
    }
    return acc;
  };
  const double g1 = g(1.0), gm1 = g(-1.0);

  const Eigen::Index n = cov.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(cov(i, i) - g1) > 1e-6 * std::max(1.0, std::abs(g1))) {
      std::ostringstream os;
      os << "gamma_covariance: diagonal entry (" << i << ") = " << cov(i, i)
         << " is inconsistent with the transform variance " << g1;
      throw std::invalid_argument(os.str());
    }

  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double target = cov(i, j);
      double c;
      if (target >= g1) {
        if (target > g1 * (1.0 + 1e-8) + 1e-14) {
          std::ostringstream os;
          os << "gamma_covariance: entry (" << i << "," << j << ") = " << target
             << " exceeds the attainable maximum " << g1;
          throw std::invalid_argument(os.str());
        }
        c = 1.0;
      } else if (target <= gm1) {
        if (target < gm1 - 1e-8 * std::abs(gm1) - 1e-14) {
          std::ostringstream os;
          os << "gamma_covariance: entry (" << i << "," << j << ") = " << target
             << " is below the attainable minimum " << gm1;
          throw std::invalid_argument(os.str());
        }
        c = -1.0;
      } else {
        // safeguarded Newton within the bracket [-1, 1]; g is increasing on
        // the relevant range for admissible covariances
        double lo = -1.0, hi = 1.0;
        c = std::clamp(target / std::max(g1, 1e-300), -1.0, 1.0);
        for (int it = 0; it < 200; ++it) {
          const double val = g(c) - target;
          if (val > 0)
            hi = c;
          else
            lo = c;
          if (hi - lo < 1e-13) break;
          double next = 0.5 * (lo + hi);
          const double d = gprime(c);
          if (d > 1e-300) {
            const double newton = c - val / d;
            if (newton > lo && newton < hi) next = newton;
          }
          if (std::abs(next - c) < 1e-15) break;
          c = next;
        }
      }
      out(i, j) = c;
      out(j, i) = c;
    }
  }
  return out;
}

}  // namespace ttchaos
