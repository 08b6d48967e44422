#pragma once

// Standard normal CDF and the regularized incomplete beta function with its
// inverse, accurate enough to define quantile transforms to ~1e-12.

#include <cmath>
#include <stdexcept>

namespace ttchaos {

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace detail {

// 15-point Gauss-Legendre on [-1, 1].
inline constexpr double kGL15Nodes[15] = {
    -0.9879925180204854, -0.9372733924007060, -0.8482065834104272, -0.7244177313601701,
    -0.5709721726085388, -0.3941513470775634, -0.2011940939974345, 0.0,
    0.2011940939974345,  0.3941513470775634,  0.5709721726085388,  0.7244177313601701,
    0.8482065834104272,  0.9372733924007060,  0.9879925180204854};
inline constexpr double kGL15Weights[15] = {
    0.0307532419961173, 0.0703660474881081, 0.1071592204671719, 0.1395706779261543,
    0.1662692058169939, 0.1861610000155622, 0.1984314853271116, 0.2025782419255613,
    0.1984314853271116, 0.1861610000155622, 0.1662692058169939, 0.1395706779261543,
    0.1071592204671719, 0.0703660474881081, 0.0307532419961173};

template <typename F>
double gl15(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 15; ++i) s += kGL15Weights[i] * f(mid + half * kGL15Nodes[i]);
  return s * half;
}

// Adaptive bisection of the panel until the two-half refinement agrees.
template <typename F>
double adaptive_gl(F&& f, double a, double b, double tol, int depth = 0) {
  const double whole = gl15(f, a, b);
  const double mid = 0.5 * (a + b);
  const double halves = gl15(f, a, mid) + gl15(f, mid, b);
  if (std::abs(whole - halves) <= tol || depth > 40) return halves;
  return adaptive_gl(f, a, mid, 0.5 * tol, depth + 1) +
         adaptive_gl(f, mid, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Regularized incomplete beta I_x(a, b) by adaptive quadrature of the density.
inline double reg_inc_beta(double a, double b, double x) {
  if (a <= 0 || b <= 0) throw std::invalid_argument("reg_inc_beta: shape parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // Integrate over the smaller tail for stability, then reflect.
  if (x > a / (a + b)) return 1.0 - reg_inc_beta(b, a, 1.0 - x);
  const double lognc = log_beta(a, b);
  auto density = [&](double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return std::exp((a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t) - lognc);
  };
  return detail::adaptive_gl(density, 0.0, x, 1e-14);
}

// Quantile of the beta distribution by safeguarded bisection/Newton to 1e-12.
inline double inv_beta_cdf(double a, double b, double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  double x = a / (a + b);  // start at the mean
  const double lognc = log_beta(a, b);
  for (int it = 0; it < 200; ++it) {
    const double f = reg_inc_beta(a, b, x) - u;
    if (f > 0)
      hi = x;
    else
      lo = x;
    if (hi - lo < 1e-13) break;
    double step_x = 0.5 * (lo + hi);
    if (x > 0.0 && x < 1.0) {
      const double dens =
          std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lognc);
      if (dens > 1e-8) {
        const double newton = x - f / dens;
        if (newton > lo && newton < hi) step_x = newton;
      }
    }
    if (std::abs(step_x - x) < 1e-15 && std::abs(f) < 1e-14) break;
    x = step_x;
  }
  return x;
}

}  // namespace ttchaos
