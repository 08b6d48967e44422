#pragma once

// Statistics of a TT response surface u(x, alpha): mean and covariance through
// the mass-scaled parametric Gram, surface evaluation in theta, Sobol indices
// by subset inclusion-exclusion, and indicator-based level-set/frequency
// functionals built with the cross interpolation.

#include "ttchaos/block_cross.hpp"
#include "ttchaos/errors.hpp"
#include "ttchaos/hermite.hpp"
#include "ttchaos/tt_dense.hpp"
#include "ttchaos/tt_round.hpp"
#include "ttchaos/tt_tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace ttchaos {

namespace detail {

inline double factorial_d(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// parametric chain of a solution train (blocks 1..M) as a block TT whose
// boundary rank is the first TT rank of u
inline TTTensor param_chain(const TTTensor& u) {
  if (u.order() < 2)
    throw std::invalid_argument("param_chain: train has no parametric blocks");
  if (u.boundary_rank() != 1)
    throw std::invalid_argument("param_chain: expected a plain solution train");
  std::vector<Tensor3> blocks;
  for (int k = 1; k < u.order(); ++k) blocks.push_back(u.block(k));
  return TTTensor(std::move(blocks));
}

// per-mode sqrt(alpha!) scaling of every block; rank-preserving
inline TTTensor mass_scaled(const TTTensor& v) {
  TTTensor out = v;
  for (int k = 0; k < out.order(); ++k) {
    Tensor3& b = out.block(k);
    for (int a = 0; a < b.mode_size(); ++a) b.slice(a) *= std::sqrt(factorial_d(a));
  }
  return out;
}

// chain product of the alpha = 0 slices: the coefficient of the mean in the
// first-rank basis
inline Eigen::VectorXd zero_order_chain(const TTTensor& v) {
  Eigen::MatrixXd c = Eigen::MatrixXd(v.block(0).slice(0));
  for (int k = 1; k < v.order(); ++k) c = c * Eigen::MatrixXd(v.block(k).slice(0));
  return c.col(0);
}

inline Eigen::Map<const RowMat> spatial_unfold(const TTTensor& u) {
  const Tensor3& b = u.block(0);
  return {b.data(), b.mode_size(), b.right_rank()};
}

// mass-scaled parametric Gram with the mean channel removed:
// C = sum_{alpha != 0} alpha! u_alpha(l) u_alpha(l')
inline Eigen::MatrixXd centered_param_gram(const TTTensor& u) {
  TTTensor v = mass_scaled(param_chain(u));
  Eigen::MatrixXd C = dot_matrix(v, v);
  Eigen::VectorXd c0 = zero_order_chain(v);
  C.noalias() -= c0 * c0.transpose();
  return C;
}

}  // namespace detail

// PCE coefficient at alpha = 0
inline Eigen::VectorXd mean(const TTTensor& u) {
  return detail::spatial_unfold(u) * detail::zero_order_chain(detail::param_chain(u));
}

inline Eigen::MatrixXd covariance(const TTTensor& u) {
  Eigen::MatrixXd C = detail::centered_param_gram(u);
  const auto U = detail::spatial_unfold(u);
  return U * C * U.transpose();
}

inline Eigen::VectorXd variance(const TTTensor& u) {
  Eigen::MatrixXd C = detail::centered_param_gram(u);
  const auto U = detail::spatial_unfold(u);
  return (U * C).cwiseProduct(U).rowwise().sum();
}

// Collocation nodes for the transition from Galerkin indices to theta values.
struct ThetaGrid {
  std::vector<Eigen::VectorXd> nodes;  // strictly increasing per dimension

  static constexpr double kMaxAbsNode = 6.0;

  static ThetaGrid uniform(int dims, int count = 9, double extent = 4.0) {
    if (dims < 1 || count < 1 || extent <= 0)
      throw std::invalid_argument("ThetaGrid::uniform: bad shape");
    Eigen::VectorXd t(count);
    for (int i = 0; i < count; ++i)
      t[i] = count == 1 ? 0.0 : -extent + 2.0 * extent * i / (count - 1);
    ThetaGrid g;
    g.nodes.assign(dims, t);
    g.validate();
    return g;
  }

  int dims() const { return static_cast<int>(nodes.size()); }

  std::vector<int> mode_sizes() const {
    std::vector<int> n(nodes.size());
    for (std::size_t m = 0; m < nodes.size(); ++m) n[m] = static_cast<int>(nodes[m].size());
    return n;
  }

  void validate() const {
    for (const auto& t : nodes) {
      if (t.size() < 1) throw config_error("ThetaGrid: empty node list");
      for (Eigen::Index i = 0; i < t.size(); ++i) {
        if (std::abs(t[i]) > kMaxAbsNode)
          throw config_error("ThetaGrid: node beyond the stable Hermite range");
        if (i > 0 && t[i] <= t[i - 1])
          throw config_error("ThetaGrid: nodes must be strictly increasing");
      }
    }
  }
};

// Contraction of one parametric block with Hermite values at given points:
// b'(s, j, t) = sum_a h_a(t_j) b(s, a, t).
namespace detail {
inline Tensor3 hermite_contract(const Tensor3& b, const Eigen::VectorXd& points) {
  const int p = b.mode_size() - 1;
  Tensor3 out(b.left_rank(), static_cast<int>(points.size()), b.right_rank());
  for (Eigen::Index j = 0; j < points.size(); ++j) {
    const Eigen::VectorXd h = HermiteTools::evaluate_all(p, points[j]);
    auto dst = out.slice(static_cast<int>(j));
    for (int a = 0; a <= p; ++a) dst += h[a] * Eigen::MatrixXd(b.slice(a));
  }
  return out;
}
}  // namespace detail

// u(x, theta) for a single theta; contracts every parametric block with the
// Hermite row (h_0..h_p)(theta_m)
inline Eigen::VectorXd surface_eval(const TTTensor& u, const Eigen::VectorXd& theta) {
  if (u.order() != theta.size() + 1)
    throw std::invalid_argument("surface_eval: theta dimension mismatch");
  for (Eigen::Index m = 0; m < theta.size(); ++m)
    if (std::abs(theta[m]) > ThetaGrid::kMaxAbsNode)
      throw config_error("surface_eval: |theta| beyond the stable Hermite range");
  Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
  for (int k = u.order() - 1; k >= 1; --k) {
    const Tensor3& b = u.block(k);
    const Eigen::VectorXd h = HermiteTools::evaluate_all(b.mode_size() - 1, theta[k - 1]);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(b.left_rank());
    for (int a = 0; a < b.mode_size(); ++a) next += h[a] * (Eigen::MatrixXd(b.slice(a)) * w);
    w = std::move(next);
  }
  return detail::spatial_unfold(u) * w;
}

// Parametric-only train over alpha -> train over theta-grid nodes; ranks are
// untouched since the contraction acts on the open mode index.
inline TTTensor param_to_grid(const TTTensor& u_param, const ThetaGrid& grid) {
  if (u_param.order() != grid.dims())
    throw std::invalid_argument("param_to_grid: grid dimension mismatch");
  grid.validate();
  std::vector<Tensor3> blocks;
  for (int k = 0; k < u_param.order(); ++k)
    blocks.push_back(detail::hermite_contract(u_param.block(k), grid.nodes[k]));
  return TTTensor(std::move(blocks));
}

// Solution train over (x, alpha) -> train over (x, theta-grid)
inline TTTensor surface_grid(const TTTensor& u, const ThetaGrid& grid) {
  if (u.order() != grid.dims() + 1)
    throw std::invalid_argument("surface_grid: grid dimension mismatch");
  grid.validate();
  std::vector<Tensor3> blocks;
  blocks.push_back(u.block(0));
  for (int k = 1; k < u.order(); ++k)
    blocks.push_back(detail::hermite_contract(u.block(k), grid.nodes[k - 1]));
  return TTTensor(std::move(blocks));
}

// Spatial functional applied to block 0, turning the solution train into a
// parametric-only train (boundary rank 1).
struct SpatialFunctional {
  enum Kind { Point, DomainMean };
  Kind kind = DomainMean;
  int node = 0;  // dof index for Point
};

inline TTTensor reduce_spatial(const TTTensor& u, const SpatialFunctional& f) {
  const auto U = detail::spatial_unfold(u);
  Eigen::RowVectorXd w;
  switch (f.kind) {
    case SpatialFunctional::Point:
      if (f.node < 0 || f.node >= U.rows())
        throw config_error("reduce_spatial: point index out of range");
      w = U.row(f.node);
      break;
    case SpatialFunctional::DomainMean:
      w = U.colwise().mean();
      break;
  }
  std::vector<Tensor3> blocks;
  const Tensor3& b1 = u.block(1);
  Tensor3 head(1, b1.mode_size(), b1.right_rank());
  for (int a = 0; a < b1.mode_size(); ++a) head.slice(a) = w * Eigen::MatrixXd(b1.slice(a));
  blocks.push_back(std::move(head));
  for (int k = 2; k < u.order(); ++k) blocks.push_back(u.block(k));
  return TTTensor(std::move(blocks));
}

// ---------------------------------------------------------------------------
// Sobol sensitivity indices

struct SobolSpec {
  std::vector<int> q;         // zero-based mode indices, sorted, duplicate-free
  bool total_effect = false;  // only the subset-recursion (closed) form exists
};

struct SobolResult {
  Eigen::VectorXd field;             // S_q(x)
  double aggregate = 0.0;            // sum_x D_q / sum_x D
  Eigen::VectorXd partial_variance;  // D_q(x)
  Eigen::VectorXd total_variance;    // D(x)
};

namespace detail {

// Gram of the mass-scaled parametric chain with the modes outside `mask`
// pinned to their zeroth-order slice; G_t = sum_{supp(alpha) subseteq t}
// alpha! u_alpha(l) u_alpha(l').
inline Eigen::MatrixXd pinned_gram(const TTTensor& v, std::uint32_t mask) {
  std::vector<Tensor3> blocks;
  for (int k = 0; k < v.order(); ++k) {
    const Tensor3& b = v.block(k);
    if (mask & (1u << k)) {
      blocks.push_back(b);
    } else {
      Tensor3 pinned(b.left_rank(), 1, b.right_rank());
      pinned.slice(0) = b.slice(0);
      blocks.push_back(std::move(pinned));
    }
  }
  TTTensor t(std::move(blocks));
  return dot_matrix(t, t);
}

}  // namespace detail

inline SobolResult sobol_index(const TTTensor& u, const SobolSpec& spec) {
  const int M = u.order() - 1;
  if (spec.total_effect)
    throw config_error("sobol_index: only the subset-recursion form is implemented");
  if (spec.q.empty()) throw config_error("sobol_index: empty variable subset");
  if (static_cast<int>(spec.q.size()) > 12)
    throw guard_error("sobol_index: subsets larger than 12 variables are refused");
  for (std::size_t i = 0; i < spec.q.size(); ++i) {
    if (spec.q[i] < 0 || spec.q[i] >= M)
      throw config_error("sobol_index: variable index out of range");
    if (i > 0 && spec.q[i] <= spec.q[i - 1])
      throw config_error("sobol_index: subset must be sorted and duplicate-free");
  }

  TTTensor v = detail::mass_scaled(detail::param_chain(u));
  const auto U = detail::spatial_unfold(u);

  // inclusion-exclusion over subsets t of q:
  // C_q = sum_t (-1)^{|q|-|t|} G_t removes every proper-subset contribution
  const int nq = static_cast<int>(spec.q.size());
  const int r1 = u.block(0).right_rank();
  Eigen::MatrixXd Cq = Eigen::MatrixXd::Zero(r1, r1);
  for (std::uint32_t sub = 0; sub < (1u << nq); ++sub) {
    std::uint32_t mask = 0;
    int bits = 0;
    for (int i = 0; i < nq; ++i)
      if (sub & (1u << i)) {
        mask |= 1u << spec.q[i];
        ++bits;
      }
    const double sign = ((nq - bits) % 2 == 0) ? 1.0 : -1.0;
    Cq += sign * detail::pinned_gram(v, mask);
  }

  SobolResult out;
  out.partial_variance = (U * Cq).cwiseProduct(U).rowwise().sum();
  out.total_variance = variance(u);
  out.field = Eigen::VectorXd::Zero(U.rows());
  for (Eigen::Index i = 0; i < U.rows(); ++i)
    if (out.total_variance[i] > 0.0) out.field[i] = out.partial_variance[i] / out.total_variance[i];
  const double den = out.total_variance.sum();
  out.aggregate = den > 0.0 ? out.partial_variance.sum() / den : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Characteristic / level set / frequency on a finite theta-grid

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct CharacteristicOptions {
  double eps = 1e-6;
  int rank_cap = 0;           // 0 = unlimited
  int misclass_samples = 2000;
  int max_attempts = 4;       // cross re-runs with fresh seeds and larger starts
  std::uint64_t seed = 0x7101;
};

struct CharacteristicResult {
  TTTensor chi;
  bool approximate = false;        // rank cap hit, cross unsettled, or misfits seen
  double misclassification = 0.0;  // indicator error rate (exhaustive on small grids)
  CrossReport report;
};

namespace detail {

// Fraction of grid points where the fitted indicator disagrees with the truth.
// Small grids are checked exhaustively, so a zero certifies the indicator.
template <typename Truth>
inline double indicator_misclassification(const TTTensor& chi, Truth&& truth_at,
                                          const std::vector<int>& modes, int sample_budget,
                                          std::uint64_t seed) {
  long long total = 1;
  bool small_grid = true;
  for (int n : modes) {
    total *= n;
    if (total > sample_budget) {
      small_grid = false;
      break;
    }
  }
  long long wrong = 0, checked = 0;
  std::vector<int> idx(modes.size(), 0);
  auto check = [&] {
    const bool fitted = element_scalar(chi, idx) > 0.5;
    wrong += truth_at(idx) != fitted ? 1 : 0;
    ++checked;
  };
  if (small_grid) {
    while (true) {
      check();
      int k = static_cast<int>(modes.size()) - 1;
      for (; k >= 0; --k) {
        if (++idx[k] < modes[k]) break;
        idx[k] = 0;
      }
      if (k < 0) break;
    }
  } else {
    std::mt19937_64 gen(seed ^ 0x51abf00dULL);
    for (int s = 0; s < sample_budget; ++s) {
      for (std::size_t k = 0; k < modes.size(); ++k)
        idx[k] = static_cast<int>(gen() % static_cast<std::uint64_t>(modes[k]));
      check();
    }
  }
  return checked > 0 ? static_cast<double>(wrong) / static_cast<double>(checked) : 0.0;
}

}  // namespace detail

// chi over the theta-grid for a spatially reduced (parametric-only) train;
// built by cross interpolation of the 0/1 indicator of u(theta) in I.
//
// Indicators are an adversarial target for cross pivoting: fibers repeat, so a
// sampled interface can be rank-deficient while the tensor is not, and the
// iterand may stall on a wrong interpolant. Each attempt therefore starts from
// a fresh seed with a larger initial rank, and the measured misclassification
// picks the winner instead of the cross's own convergence flag.
inline CharacteristicResult characteristic(const TTTensor& u_param, const Interval& I,
                                           const ThetaGrid& grid,
                                           const CharacteristicOptions& opt = {}) {
  if (u_param.boundary_rank() != 1)
    throw std::invalid_argument("characteristic: reduce the spatial index first");
  TTTensor g = param_to_grid(u_param, grid);

  TensorEvaluator ev;
  ev.mode_sizes = g.mode_sizes();
  ev.outputs = 1;
  ev.eval = [&g, &I](const std::vector<std::vector<int>>& idx) {
    Eigen::MatrixXd out(idx.size(), 1);
    for (std::size_t r = 0; r < idx.size(); ++r)
      out(static_cast<Eigen::Index>(r), 0) = I.contains(element_scalar(g, idx[r])) ? 1.0 : 0.0;
    return out;
  };
  auto truth_at = [&g, &I](const std::vector<int>& idx) {
    return I.contains(element_scalar(g, idx));
  };

  // Grids small enough to enumerate get the indicator exactly via dense
  // SVD compression; the verification loop costs the same enumeration anyway.
  long long total = 1;
  bool small_grid = true;
  for (int n : ev.mode_sizes) {
    total *= n;
    if (total > opt.misclass_samples) {
      small_grid = false;
      break;
    }
  }
  if (small_grid) {
    Eigen::VectorXd dense(total);
    std::vector<int> idx(g.order(), 0);
    for (long long f = 0;;) {
      dense[f++] = truth_at(idx) ? 1.0 : 0.0;
      int k = g.order() - 1;
      for (; k >= 0; --k) {
        if (++idx[k] < ev.mode_sizes[k]) break;
        idx[k] = 0;
      }
      if (k < 0) break;
    }
    CharacteristicResult res;
    res.chi = tt_from_dense(dense, ev.mode_sizes, 1e-13);
    res.report.evaluator_calls = total;
    res.report.converged = true;
    if (opt.rank_cap > 0 && res.chi.max_rank() > opt.rank_cap) {
      res.chi = rounded(res.chi, opt.eps, opt.rank_cap);
      res.report.rank_capped = true;
    }
    res.report.max_rank = res.chi.max_rank();
    res.misclassification = detail::indicator_misclassification(
        res.chi, truth_at, ev.mode_sizes, opt.misclass_samples, opt.seed);
    res.approximate = res.report.rank_capped || res.misclassification > 0.0;
    return res;
  }

  int base_rank = 8;
  for (int n : ev.mode_sizes) base_rank = std::max(base_rank, n);

  CharacteristicResult best;
  bool have_best = false;
  for (int attempt = 0; attempt < std::max(1, opt.max_attempts); ++attempt) {
    CrossOptions copt;
    copt.eps = opt.eps;
    copt.rank_cap = opt.rank_cap;
    copt.seed = opt.seed + 0x9b97ull * static_cast<std::uint64_t>(attempt);
    copt.initial_rank = std::min(base_rank * (attempt + 1), 64);
    copt.max_sweeps = 12 + 6 * attempt;
    copt.max_restarts = 3;

    CharacteristicResult res;
    res.chi = block_tt_cross(ev, copt, &res.report);
    res.misclassification = detail::indicator_misclassification(
        res.chi, truth_at, ev.mode_sizes, opt.misclass_samples, copt.seed);
    res.approximate =
        res.report.rank_capped || !res.report.converged || res.misclassification > 0.0;

    const bool better = !have_best || res.misclassification < best.misclassification ||
                        (res.misclassification == best.misclassification && !res.approximate &&
                         best.approximate);
    if (better) {
      best = std::move(res);
      have_best = true;
    }
    // stop once the indicator checks out, or once the cap is provably binding
    if (best.misclassification == 0.0 && (!best.approximate || best.report.rank_capped)) break;
  }
  return best;
}

inline TTTensor level_set(const TTTensor& u_grid, const TTTensor& chi, double eps) {
  return rounded(hadamard(u_grid, chi), eps);
}

inline double frequency(const TTTensor& chi) {
  return dot(chi, TTTensor::ones(chi.mode_sizes()));
}

// ---------------------------------------------------------------------------
// Maximum estimation via cross fibers

struct MaxEstimate {
  double value = 0.0;       // signed value at the extremal sampled entry
  std::vector<int> index;   // its multi-index
};

// Runs a cross pass over the tensor and returns the largest-magnitude entry
// among all sampled fibers; a lower bound on max |u|.
inline MaxEstimate max_estimate(const TTTensor& u, double eps = 1e-8,
                                std::uint64_t seed = 0x7101) {
  TensorEvaluator ev;
  ev.mode_sizes = u.mode_sizes();
  ev.outputs = 1;
  ev.eval = [&u](const std::vector<std::vector<int>>& idx) {
    Eigen::MatrixXd out(idx.size(), 1);
    for (std::size_t r = 0; r < idx.size(); ++r)
      out(static_cast<Eigen::Index>(r), 0) = element_scalar(u, idx[r]);
    return out;
  };
  CrossOptions copt;
  copt.eps = eps;
  copt.seed = seed;
  CrossReport rep;
  block_tt_cross(ev, copt, &rep);
  MaxEstimate est;
  est.index = rep.argmax_index;
  est.value = est.index.empty() ? 0.0 : element_scalar(u, est.index);
  return est;
}

}  // namespace ttchaos
