#include "regtv/errors.hpp"
#include "regtv/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace regtv;

namespace {

double double_factorial(int n) {
  double r = 1.0;
  for (int k = n; k > 1; k -= 2) r *= k;
  return r;
}

double moment(const GaussianRule& r, int p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
  return s;
}

double abs_moment(const GaussianRule& r, int p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(std::abs(r.nodes[i]), p);
  return s;
}

}  // namespace

TEST(Quadrature, HermiteExactForPolynomials) {
  const GaussianRule r = gauss_hermite(12);
  EXPECT_NEAR(r.weights.sum(), 1.0, 1e-14);
  for (int p = 1; p < 24; ++p) {
    const double exact = p % 2 ? 0.0 : double_factorial(p - 1);
    EXPECT_NEAR(moment(r, p), exact, 1e-12 * abs_moment(r, p)) << "p=" << p;
  }
}

TEST(Quadrature, LegendreOnInterval) {
  const GaussianRule r = gauss_legendre(8);
  EXPECT_NEAR(r.weights.sum(), 2.0, 1e-14);
  for (int p = 0; p < 16; ++p) EXPECT_NEAR(moment(r, p), p % 2 ? 0.0 : 2.0 / (p + 1), 1e-14);
  EXPECT_THROW(gauss_legendre(0), ArgumentError);
}

TEST(Quadrature, CompositeNormalMoments) {
  const GaussianRule r = composite_gauss_legendre(40, 8, 12.0);
  for (int p : {0, 2, 4, 6}) EXPECT_NEAR(moment(r, p), double_factorial(p - 1), 1e-10 * double_factorial(p - 1));
  const std::vector<double> bp{-12.0, -0.3, 0.0, 0.3, 12.0};
  const GaussianRule b = composite_gauss_legendre(bp, 10, 8);
  EXPECT_NEAR(moment(b, 4), 3.0, 1e-10);
  // indicator with a jump on a breakpoint integrates exactly
  double half = 0.0;
  for (Eigen::Index i = 0; i < b.nodes.size(); ++i) half += b.nodes[i] > 0 ? b.weights[i] : 0.0;
  EXPECT_NEAR(half, 0.5, 1e-12);
}

TEST(Quadrature, TensorExpectation) {
  const GaussianRule r = gauss_hermite(10);
  const double e = tensor_expectation(r, 3, [](const Eigen::VectorXd& x) {
    return x[0] * x[0] * x[1] * x[1] + std::pow(x[2], 4);
  });
  EXPECT_NEAR(e, 4.0, 1e-12);
  const std::vector<GaussianRule> mixed{gauss_hermite(4), gauss_hermite(6)};
  EXPECT_NEAR(tensor_expectation(mixed, [](const Eigen::VectorXd& x) { return x[0] * x[0] + x[1] * x[1] * x[1] * x[1]; }),
              4.0, 1e-12);
}
