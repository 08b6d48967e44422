#include "ttchaos/covariance.hpp"
#include "ttchaos/kle.hpp"
#include "ttchaos/multi_index.hpp"
#include "ttchaos/pce.hpp"
#include "ttchaos/transform.hpp"
#include "ttchaos/tt_dense.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ttchaos;

namespace {

// Closed-form CDF of Beta(5, 2) and a test-side Newton inversion, independent
// of the library's incomplete-beta machinery.
double beta52_cdf(double x) { return 6.0 * std::pow(x, 5) - 5.0 * std::pow(x, 6); }

double beta52_quantile(double u) {
  double lo = 0.0, hi = 1.0, x = std::pow(u, 0.2);
  for (int it = 0; it < 100; ++it) {
    const double f = beta52_cdf(x) - u;
    if (f > 0)
      hi = x;
    else
      lo = x;
    const double d = 30.0 * std::pow(x, 4) * (1.0 - x);
    double next = (d > 1e-300) ? x - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-15) break;
    x = next;
  }
  return x;
}

struct BoxMuller {
  std::mt19937_64 gen;
  bool has_spare = false;
  double spare = 0.0;
  explicit BoxMuller(std::uint64_t seed) : gen(seed) {}
  double operator()() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = 0.0;
    while (u <= 1e-300) u = unif(gen);
    const double v = unif(gen);
    const double r = std::sqrt(-2.0 * std::log(u));
    spare = r * std::sin(2.0 * M_PI * v);
    has_spare = true;
    return r * std::cos(2.0 * M_PI * v);
  }
};

}  // namespace

TEST(Transform, IdentityMap) {
  TransformPhi t = transform_coeffs([](double z) { return z; }, 6);
  EXPECT_TRUE(t.quadrature_converged);
  EXPECT_NEAR(t.coeffs[1], 1.0, 1e-12);
  for (int i : {0, 2, 3, 4, 5, 6}) EXPECT_NEAR(t.coeffs[i], 0.0, 1e-11);
  EXPECT_NEAR(t.second_moment, 1.0, 1e-11);
  EXPECT_NEAR(t.series_variance(), 1.0, 1e-11);
}

TEST(Transform, SquareMap) {
  // z^2 = h_0 + h_2
  TransformPhi t = transform_coeffs([](double z) { return z * z; }, 5);
  EXPECT_NEAR(t.coeffs[0], 1.0, 1e-11);
  EXPECT_NEAR(t.coeffs[2], 1.0, 1e-11);
  for (int i : {1, 3, 4, 5}) EXPECT_NEAR(t.coeffs[i], 0.0, 1e-11);
  EXPECT_NEAR(t.second_moment, 3.0, 1e-10);  // E[z^4]
  EXPECT_NEAR(t.series_variance(), 2.0, 1e-10);
}

TEST(Transform, ExponentialMapClosedForm) {
  // E[e^z h_i(z)] = e^{1/2}, so phi_i = sqrt(e) / i!
  const int Q = 10;
  TransformPhi t = transform_coeffs([](double z) { return std::exp(z); }, Q);
  EXPECT_TRUE(t.quadrature_converged);
  double f = 1.0;
  for (int i = 0; i <= Q; ++i) {
    if (i > 0) f *= i;
    EXPECT_NEAR(t.coeffs[i], std::sqrt(M_E) / f, 1e-10) << "order " << i;
  }
  EXPECT_NEAR(t.second_moment, std::exp(2.0), 1e-8);  // E[e^{2z}]
}

TEST(Transform, BetaMarginalMatchesMonteCarlo) {
  const int Q = 8;
  TransformPhi t = beta_marginal_transform(5.0, 2.0, 0.0, Q);
  EXPECT_TRUE(t.quadrature_converged);

  // Beta(5,2) mean 5/7 and variance 10/392 are inherited exactly by phi(Z).
  EXPECT_NEAR(t.coeffs[0], 5.0 / 7.0, 1e-10);
  EXPECT_NEAR(t.second_moment - t.coeffs[0] * t.coeffs[0], 10.0 / 392.0, 1e-10);

  // Monte Carlo projection with the closed-form quantile.
  const int n = 500'000;
  BoxMuller rng(0xABCDEF12345ULL);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(Q + 1);
  Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(Q + 1);
  for (int s = 0; s < n; ++s) {
    const double z = rng();
    const double x = beta52_quantile(std_normal_cdf(z));
    const Eigen::VectorXd h = HermiteTools::evaluate_all(Q, z);
    sum += x * h;
    sumsq += (x * h).cwiseAbs2();
  }
  double f = 1.0;
  for (int i = 0; i <= Q; ++i) {
    if (i > 0) f *= i;
    const double mean = sum[i] / n;
    const double var = sumsq[i] / n - mean * mean;
    const double se = std::sqrt(std::max(var, 0.0) / n);
    EXPECT_NEAR(t.coeffs[i], mean / f, 5.0 * se / f + 1e-8) << "order " << i;
  }
}

TEST(Transform, ParsevalTailIsSmall) {
  TransformPhi t = beta_marginal_transform(5.0, 2.0, 0.3, 12);
  double sum = t.coeffs[0] * t.coeffs[0], f = 1.0;
  for (int i = 1; i <= 12; ++i) {
    f *= i;
    sum += f * t.coeffs[i] * t.coeffs[i];
  }
  // truncated energy can only fall short of the full second moment
  EXPECT_LE(sum, t.second_moment + 1e-12);
  EXPECT_NEAR(sum, t.second_moment, 1e-8 * t.second_moment);
  EXPECT_LT(t.tail_indicator(), 1e-6);
  // series approximates the map pointwise on the bulk of the Gaussian mass
  for (double z = -3.0; z <= 3.0; z += 0.25)
    EXPECT_NEAR(t.series_value(z), t.value(z), 2e-3);
}

TEST(Covariance, CorrelationMatrixFamilies) {
  Eigen::MatrixXd pts(3, 2);
  pts << 0.0, 0.0, 1.0, 0.0, 0.0, 2.0;
  Eigen::MatrixXd g = correlation_matrix(pts, CovarianceFamily::Gaussian, 0.5);
  Eigen::MatrixXd e = correlation_matrix(pts, CovarianceFamily::Exponential, 0.5);
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(g(i, i), 1.0);
    EXPECT_DOUBLE_EQ(e(i, i), 1.0);
  }
  EXPECT_NEAR(g(0, 1), std::exp(-1.0 / 0.25), 1e-14);
  EXPECT_NEAR(g(0, 2), std::exp(-4.0 / 0.25), 1e-14);
  EXPECT_NEAR(e(0, 1), std::exp(-1.0 / 0.5), 1e-14);
  EXPECT_NEAR(e(0, 2), std::exp(-2.0 / 0.5), 1e-14);
  EXPECT_NEAR(g(1, 2), std::exp(-5.0 / 0.25), 1e-14);
  EXPECT_TRUE(g.isApprox(g.transpose()));
  EXPECT_THROW(covariance_family_from_string("triangular"), std::invalid_argument);
}

TEST(Covariance, GaussianInversionRoundTrip) {
  const int Q = 8;
  TransformPhi t = beta_marginal_transform(5.0, 2.0, 0.0, Q);
  // forward map computed independently in the test
  Eigen::VectorXd w(Q + 1);
  w[0] = 0.0;
  double f = 1.0;
  for (int i = 1; i <= Q; ++i) {
    f *= i;
    w[i] = f * t.coeffs[i] * t.coeffs[i];
  }
  auto g = [&](double c) {
    double acc = 0.0, p = 1.0;
    for (int i = 1; i <= Q; ++i) {
      p *= c;
      acc += w[i] * p;
    }
    return acc;
  };

  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> unif(-0.2, 0.95);
  const int n = 6;
  Eigen::MatrixXd c_true(n, n), cov(n, n);
  for (int i = 0; i < n; ++i) {
    c_true(i, i) = 1.0;
    cov(i, i) = g(1.0);
    for (int j = i + 1; j < n; ++j) {
      c_true(i, j) = c_true(j, i) = unif(gen);
      cov(i, j) = cov(j, i) = g(c_true(i, j));
    }
  }
  Eigen::MatrixXd c = gamma_covariance(cov, t);
  EXPECT_LT((c - c_true).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Covariance, InversionRejectsBadInputs) {
  TransformPhi t = beta_marginal_transform(5.0, 2.0, 0.0, 6);
  const double g1 = t.series_variance();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(2, 2, 0.3 * g1);
  cov(0, 0) = cov(1, 1) = g1;

  Eigen::MatrixXd bad_diag = cov;
  bad_diag(0, 0) *= 1.01;
  EXPECT_THROW(gamma_covariance(bad_diag, t), std::invalid_argument);

  Eigen::MatrixXd too_big = cov;
  too_big(0, 1) = too_big(1, 0) = 1.5 * g1;
  EXPECT_THROW(gamma_covariance(too_big, t), std::invalid_argument);

  // slightly above the maximum clamps to perfect correlation
  Eigen::MatrixXd near_one = cov;
  near_one(0, 1) = near_one(1, 0) = g1 * (1.0 + 1e-9);
  Eigen::MatrixXd c = gamma_covariance(near_one, t);
  EXPECT_DOUBLE_EQ(c(0, 1), 1.0);
}

TEST(Kle, WeightedEigenpairs) {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> nd;
  const int n = 8;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = nd(gen);
  Eigen::MatrixXd C = A * A.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd wts(n);
  for (int i = 0; i < n; ++i) wts[i] = 0.5 + 1.5 * std::abs(nd(gen));

  EigenPairs full = discrete_kle(C, wts, n);
  const double lmax = full.values[0];
  double trace = 0.0;
  for (int i = 0; i < n; ++i) trace += wts[i] * C(i, i);
  EXPECT_NEAR(full.values.sum(), trace, 1e-9 * trace);
  for (int k = 0; k < n; ++k) {
    if (k > 0) EXPECT_GE(full.values[k - 1], full.values[k]);
    Eigen::VectorXd resid =
        C * wts.asDiagonal() * full.vectors.col(k) - full.values[k] * full.vectors.col(k);
    EXPECT_LT(resid.norm(), 1e-9 * lmax);
    for (int j = 0; j <= k; ++j) {
      const double ip = full.vectors.col(k).dot(wts.asDiagonal() * full.vectors.col(j));
      EXPECT_NEAR(ip, k == j ? 1.0 : 0.0, 1e-10);
    }
  }

  EigenPairs top = discrete_kle(C, wts, 3);
  EXPECT_TRUE(top.values.isApprox(full.values.head(3)));
  EXPECT_TRUE(top.vectors.isApprox(full.vectors.leftCols(3)));
}

TEST(Kle, RejectsIndefiniteAndBadWeights) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(3, 3);
  C(2, 2) = -0.5;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(3);
  EXPECT_THROW(discrete_kle(C, w, 3), std::runtime_error);

  Eigen::MatrixXd ok = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd wbad = w;
  wbad[1] = 0.0;
  EXPECT_THROW(discrete_kle(ok, wbad, 3), std::invalid_argument);
  EXPECT_THROW(discrete_kle(ok, w, 4), std::invalid_argument);
  EXPECT_THROW(discrete_kle(ok, w, 0), std::invalid_argument);
}

TEST(MultiIndex, FullSetEnumeration) {
  FullIndexSet set({2, 3, 2});
  EXPECT_EQ(set.size(), 36u);
  EXPECT_EQ(set.at(0), (std::vector<int>{0, 0, 0}));
  EXPECT_EQ(set.at(1), (std::vector<int>{0, 0, 1}));  // last mode fastest
  EXPECT_EQ(set.at(3), (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(set.at(35), (std::vector<int>{2, 3, 2}));
  for (std::size_t i = 0; i < set.size(); ++i) EXPECT_EQ(set.index_of(set.at(i)), i);
  EXPECT_TRUE(set.contains({1, 3, 0}));
  EXPECT_FALSE(set.contains({3, 0, 0}));
  EXPECT_THROW(set.index_of({0, 4, 0}), std::out_of_range);
}

TEST(MultiIndex, SparseSetTotalDegree) {
  SparseIndexSet set(3, 2);
  EXPECT_EQ(set.size(), 10u);  // C(3+2, 2)
  EXPECT_EQ(SparseIndexSet(2, 3).size(), 10u);
  EXPECT_EQ(SparseIndexSet(5, 0).size(), 1u);
  // lexicographic ascending
  for (std::size_t i = 1; i < set.size(); ++i) EXPECT_LT(set.at(i - 1), set.at(i));
  for (std::size_t i = 0; i < set.size(); ++i) {
    int total = 0;
    for (int a : set.at(i)) total += a;
    EXPECT_LE(total, 2);
    EXPECT_EQ(set.index_of(set.at(i)), i);
  }
  EXPECT_TRUE(set.contains({1, 1, 0}));
  EXPECT_FALSE(set.contains({1, 1, 1}));
  EXPECT_THROW(set.index_of({1, 1, 1}), std::out_of_range);
}

namespace {

// Tiny expansion fixture with unit spatial weights, identity field modes and
// exactly unit-variance Gaussian argument per node, so every projected
// quantity has a closed Monte Carlo counterpart.
KleBasis tiny_basis() {
  KleBasis kle;
  const int N = 3;
  kle.weights = Eigen::VectorXd::Ones(N);
  kle.mean.resize(N);
  kle.mean << 0.4, -0.2, 0.9;
  kle.field_modes = Eigen::MatrixXd::Identity(N, N);
  kle.field_values = Eigen::VectorXd::Ones(N);
  kle.gauss_modes.resize(N, 2);
  const double th[N] = {0.3, 1.1, 2.0};
  for (int x = 0; x < N; ++x) {
    kle.gauss_modes(x, 0) = std::cos(th[x]);
    kle.gauss_modes(x, 1) = std::sin(th[x]);
  }
  kle.gauss_values = Eigen::VectorXd::Ones(2);
  return kle;
}

}  // namespace

TEST(Pce, CoefficientsMatchMonteCarlo) {
  const int Q = 8;
  KleBasis kle = tiny_basis();
  TransformPhi phi = beta_marginal_transform(5.0, 2.0, 0.0, Q);

  SparseIndexSet set(2, 3);
  Eigen::MatrixXd direct = sparse_pce_direct(kle, phi, set);  // (#set x N)

  const int n = 400'000;
  BoxMuller rng(0x5151515151ULL);
  const int S = static_cast<int>(set.size());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(S, 3);
  Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(S, 3);
  HermiteTools tools(3);
  for (int s = 0; s < n; ++s) {
    const double z0 = rng(), z1 = rng();
    const Eigen::VectorXd h0 = HermiteTools::evaluate_all(3, z0);
    const Eigen::VectorXd h1 = HermiteTools::evaluate_all(3, z1);
    for (int x = 0; x < 3; ++x) {
      const double gamma = kle.gauss_modes(x, 0) * z0 + kle.gauss_modes(x, 1) * z1;
      const double kappa = kle.mean[x] + beta52_quantile(std_normal_cdf(gamma));
      for (int i = 0; i < S; ++i) {
        const auto& a = set.at(i);
        const double y =
            kappa * h0[a[0]] * h1[a[1]] / (tools.factorial(a[0]) * tools.factorial(a[1]));
        sum(i, x) += y;
        sumsq(i, x) += y * y;
      }
    }
  }
  for (int i = 0; i < S; ++i)
    for (int x = 0; x < 3; ++x) {
      const double mean = sum(i, x) / n;
      const double var = sumsq(i, x) / n - mean * mean;
      const double se = std::sqrt(std::max(var, 0.0) / n);
      EXPECT_NEAR(direct(i, x), mean, 5.0 * se + 1e-8)
          << "alpha = (" << set.at(i)[0] << "," << set.at(i)[1] << ") node " << x;
    }
}

TEST(Pce, TruncatedOrdersAreExactZeros) {
  KleBasis kle = tiny_basis();
  TransformPhi phi = beta_marginal_transform(5.0, 2.0, 0.0, 3);
  bool truncated = false;
  Eigen::MatrixXd c = pce_coefficients(kle, phi, {{2, 2}, {1, 1}}, &truncated);
  EXPECT_TRUE(truncated);
  EXPECT_TRUE(c.row(0).isZero(0.0));
  EXPECT_FALSE(c.row(1).isZero(1e-12));
}

TEST(Pce, EntryEvaluatorMatchesDirectCall) {
  KleBasis kle = tiny_basis();
  TransformPhi phi = beta_marginal_transform(5.0, 2.0, 0.0, 6);
  TensorEvaluator ev = pce_entry_evaluator(kle, phi, {3, 2});
  ASSERT_EQ(ev.mode_sizes, (std::vector<int>{4, 3}));
  EXPECT_EQ(ev.outputs, 3);
  std::vector<std::vector<int>> idx = {{0, 0}, {3, 2}, {1, 2}, {2, 0}};
  Eigen::MatrixXd got = ev.eval(idx);
  Eigen::MatrixXd want = pce_coefficients(kle, phi, idx);
  EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Pce, BuildKappaTtMatchesDirectFormula) {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> nd;
  const int N = 4, L = 2;
  KleBasis kle;
  kle.weights = Eigen::VectorXd::Ones(N);
  kle.mean.resize(N);
  kle.field_modes.resize(N, L);
  for (int x = 0; x < N; ++x) {
    kle.mean[x] = nd(gen);
    for (int l = 0; l < L; ++l) kle.field_modes(x, l) = nd(gen);
  }
  kle.field_values = Eigen::VectorXd::Ones(L);
  kle.gauss_modes = Eigen::MatrixXd::Zero(N, 2);
  kle.gauss_values = Eigen::VectorXd::Ones(2);

  GaussianSampler sampler(4242);
  TTTensor coeff = random_tt({3, 4}, {L, 3, 1}, sampler);
  TTTensor full = build_kappa_tt(coeff, kle);

  ASSERT_EQ(full.order(), 3);
  // interior coefficient rank 3 gains the mean channel
  EXPECT_EQ(full.ranks(), (std::vector<int>{1, L + 1, 4, 1}));

  for (int x = 0; x < N; ++x)
    for (int a0 = 0; a0 < 3; ++a0)
      for (int a1 = 0; a1 < 4; ++a1) {
        const Eigen::VectorXd cl = element(coeff, {a0, a1});
        double want = (a0 == 0 && a1 == 0) ? kle.mean[x] : 0.0;
        for (int l = 0; l < L; ++l) want += kle.field_modes(x, l) * cl[l];
        EXPECT_NEAR(element_scalar(full, {x, a0, a1}), want, 1e-12);
      }
}

TEST(Pce, SingleModeFieldTrain) {
  KleBasis kle;
  kle.weights = Eigen::VectorXd::Ones(2);
  kle.mean.resize(2);
  kle.mean << 1.0, 2.0;
  kle.field_modes.resize(2, 1);
  kle.field_modes << 0.5, -0.25;
  kle.field_values = Eigen::VectorXd::Ones(1);
  kle.gauss_modes = Eigen::MatrixXd::Zero(2, 1);
  kle.gauss_values = Eigen::VectorXd::Ones(1);

  GaussianSampler sampler(7);
  TTTensor coeff = random_tt({5}, {1, 1}, sampler);
  TTTensor full = build_kappa_tt(coeff, kle);
  ASSERT_EQ(full.order(), 2);
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 5; ++a) {
      const double want =
          (a == 0 ? kle.mean[x] : 0.0) + kle.field_modes(x, 0) * element(coeff, {a})[0];
      EXPECT_NEAR(element_scalar(full, {x, a}), want, 1e-13);
    }
}

TEST(Pce, CrossAssemblyMatchesDenseExpansion) {
  // end-to-end on a tiny case: cross-interpolate the coefficient train over
  // the full order grid and compare the assembled field train entrywise with
  // the direct formula.
  KleBasis kle = tiny_basis();
  TransformPhi phi = beta_marginal_transform(5.0, 2.0, 0.2, 8);
  std::vector<int> limits = {2, 2};
  TensorEvaluator ev = pce_entry_evaluator(kle, phi, limits);

  CrossOptions opt;
  opt.eps = 1e-10;
  opt.initial_rank = 3;
  opt.seed = 2024;
  CrossReport rep;
  TTTensor coeff = block_tt_cross(ev, opt, &rep);
  TTTensor full = build_kappa_tt(coeff, kle);

  FullIndexSet alphas(limits);
  std::vector<std::vector<int>> all;
  for (std::size_t i = 0; i < alphas.size(); ++i) all.push_back(alphas.at(i));
  Eigen::MatrixXd want = pce_coefficients(kle, phi, all);

  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const auto& a = alphas.at(i);
    for (int x = 0; x < 3; ++x) {
      double expect = (a[0] == 0 && a[1] == 0) ? kle.mean[x] : 0.0;
      for (int l = 0; l < 3; ++l) expect += kle.field_modes(x, l) * want(i, l);
      EXPECT_NEAR(element_scalar(full, {x, a[0], a[1]}), expect, 1e-8);
    }
  }
}
