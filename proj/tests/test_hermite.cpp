#include "ttchaos/hermite.hpp"
#include "ttchaos/special_functions.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ttchaos;

TEST(Hermite, LowOrderClosedForms) {
  for (double z : {-2.0, -0.5, 0.0, 0.7, 1.9}) {
    EXPECT_DOUBLE_EQ(HermiteTools::evaluate(0, z), 1.0);
    EXPECT_DOUBLE_EQ(HermiteTools::evaluate(1, z), z);
    EXPECT_NEAR(HermiteTools::evaluate(2, z), z * z - 1.0, 1e-14);
    EXPECT_NEAR(HermiteTools::evaluate(3, z), z * z * z - 3.0 * z, 1e-13);
    EXPECT_NEAR(HermiteTools::evaluate(4, z), std::pow(z, 4) - 6.0 * z * z + 3.0, 1e-13);
    Eigen::VectorXd all = HermiteTools::evaluate_all(4, z);
    for (int i = 0; i <= 4; ++i) EXPECT_NEAR(all[i], HermiteTools::evaluate(i, z), 1e-13);
  }
}

TEST(Hermite, OrthogonalityUnderGaussQuadrature) {
  // <h_a, h_b> = a! delta_ab; 20 nodes integrate degree <= 39 exactly.
  Eigen::VectorXd nodes, weights;
  HermiteTools::gauss_quadrature(20, nodes, weights);
  HermiteTools tools(8);
  for (int a = 0; a <= 8; ++a)
    for (int b = 0; b <= 8; ++b) {
      double acc = 0.0;
      for (int q = 0; q < nodes.size(); ++q)
        acc += weights[q] * HermiteTools::evaluate(a, nodes[q]) *
               HermiteTools::evaluate(b, nodes[q]);
      const double want = a == b ? tools.factorial(a) : 0.0;
      // cancellation noise scales with the norms of the two polynomials
      const double scale = std::sqrt(tools.factorial(a) * tools.factorial(b));
      EXPECT_NEAR(acc, want, 1e-12 * scale + 1e-11);
    }
}

TEST(Hermite, GaussQuadratureMoments) {
  Eigen::VectorXd nodes, weights;
  HermiteTools::gauss_quadrature(2, nodes, weights);
  // two-point rule: nodes +-1 with weights 1/2
  EXPECT_NEAR(nodes[0], -1.0, 1e-12);
  EXPECT_NEAR(nodes[1], 1.0, 1e-12);
  EXPECT_NEAR(weights[0], 0.5, 1e-12);
  EXPECT_NEAR(weights[1], 0.5, 1e-12);

  HermiteTools::gauss_quadrature(8, nodes, weights);
  EXPECT_NEAR(weights.sum(), 1.0, 1e-12);
  double m2 = 0, m4 = 0, m6 = 0;
  for (int q = 0; q < 8; ++q) {
    m2 += weights[q] * std::pow(nodes[q], 2);
    m4 += weights[q] * std::pow(nodes[q], 4);
    m6 += weights[q] * std::pow(nodes[q], 6);
  }
  EXPECT_NEAR(m2, 1.0, 1e-11);
  EXPECT_NEAR(m4, 3.0, 1e-11);
  EXPECT_NEAR(m6, 15.0, 1e-10);
}

TEST(Hermite, TripleProductKnownValues) {
  HermiteTools tools(4);
  EXPECT_DOUBLE_EQ(tools.triple_product(0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(tools.triple_product(1, 1, 0), 1.0);
  EXPECT_DOUBLE_EQ(tools.triple_product(0, 1, 1), 1.0);
  EXPECT_DOUBLE_EQ(tools.triple_product(1, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(tools.triple_product(1, 1, 1), 0.0);  // odd total degree
  EXPECT_DOUBLE_EQ(tools.triple_product(0, 0, 1), 0.0);
  EXPECT_DOUBLE_EQ(tools.triple_product(2, 2, 2), 8.0);
  EXPECT_DOUBLE_EQ(tools.triple_product(1, 1, 2), 2.0);
  EXPECT_DOUBLE_EQ(tools.triple_product(3, 2, 1), 6.0);
  EXPECT_DOUBLE_EQ(tools.triple_product(4, 2, 2), 24.0);
  EXPECT_DOUBLE_EQ(tools.triple_product(3, 1, 1), 0.0);  // triangle violated
}

TEST(Hermite, TripleProductMatchesQuadrature) {
  const int P = 5;
  HermiteTools tools(P);
  Eigen::VectorXd nodes, weights;
  HermiteTools::gauss_quadrature(2 * P + 6, nodes, weights);
  for (int a = 0; a <= P; ++a)
    for (int b = 0; b <= P; ++b)
      for (int nu = 0; nu <= 2 * P; ++nu) {
        double acc = 0.0;
        for (int q = 0; q < nodes.size(); ++q)
          acc += weights[q] * HermiteTools::evaluate(a, nodes[q]) *
                 HermiteTools::evaluate(b, nodes[q]) * HermiteTools::evaluate(nu, nodes[q]);
        const double scale =
            std::sqrt(tools.factorial(a) * tools.factorial(b)) * std::sqrt(tools.factorial(nu));
        EXPECT_NEAR(tools.triple_product(a, b, nu), acc, 2e-10 * scale + 1e-9 * std::abs(acc))
            << "a=" << a << " b=" << b << " nu=" << nu;
        EXPECT_DOUBLE_EQ(tools.triple_product_slice(nu)(a, b), tools.triple_product(a, b, nu));
      }
}

TEST(SpecialFunctions, NormalCdf) {
  EXPECT_DOUBLE_EQ(std_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(std_normal_cdf(1.0), 0.841344746068543, 1e-12);
  EXPECT_NEAR(std_normal_cdf(2.0), 0.977249868051821, 1e-12);
  EXPECT_NEAR(std_normal_cdf(-1.0), 1.0 - 0.841344746068543, 1e-12);
}

TEST(SpecialFunctions, RegIncBetaClosedForm52) {
  // I_x(5, 2) = 6 x^5 - 5 x^6
  for (double x = 0.05; x < 1.0; x += 0.05) {
    const double want = 6.0 * std::pow(x, 5) - 5.0 * std::pow(x, 6);
    EXPECT_NEAR(reg_inc_beta(5.0, 2.0, x), want, 1e-12);
  }
  EXPECT_DOUBLE_EQ(reg_inc_beta(5.0, 2.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(reg_inc_beta(5.0, 2.0, 1.0), 1.0);
}

TEST(SpecialFunctions, RegIncBetaSymmetricCase) {
  // I_x(2, 2) = x^2 (3 - 2x)
  for (double x = 0.1; x < 1.0; x += 0.1)
    EXPECT_NEAR(reg_inc_beta(2.0, 2.0, x), x * x * (3.0 - 2.0 * x), 1e-12);
}

TEST(SpecialFunctions, InvBetaCdfRoundTrip) {
  const double params[][2] = {{5.0, 2.0}, {2.0, 2.0}, {3.5, 1.5}, {1.0, 4.0}};
  for (auto& p : params) {
    for (double u = 0.02; u < 1.0; u += 0.07) {
      const double x = inv_beta_cdf(p[0], p[1], u);
      EXPECT_NEAR(reg_inc_beta(p[0], p[1], x), u, 1e-10);
    }
  }
}
