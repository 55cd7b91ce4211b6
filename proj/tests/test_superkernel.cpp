#include "regtv/distances.hpp"
#include "regtv/errors.hpp"
#include "regtv/superkernel.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace regtv;

namespace {

const SuperKernel& kernel() {
  static const SuperKernel k = SuperKernel::build();
  return k;
}

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

}  // namespace

TEST(SuperKernel, NormalizedWithVanishingMoments) {
  const MomentTable t = moments(kernel(), 8, 2);
  EXPECT_NEAR(t.moments[0], 1.0, 1e-8);
  for (int m = 1; m <= 8; ++m) {
    EXPECT_LE(std::abs(t.moments[m]), 1e-6) << "moment " << m;
    if (m % 2) EXPECT_LE(std::abs(t.moments[m]), 1e-8) << "odd moment " << m;
  }
  for (Eigen::Index m = 0; m < t.abs_moments.rows(); ++m) {
    for (Eigen::Index j = 0; j < t.abs_moments.cols(); ++j) {
      EXPECT_TRUE(std::isfinite(t.abs_moments(m, j)));
      EXPECT_GT(t.abs_moments(m, j), 0.0);
    }
  }
}

TEST(SuperKernel, SymbolPlateauAndSupport) {
  const KernelParams& p = kernel().params();
  EXPECT_EQ(kernel().symbol(0.0), 1.0);
  EXPECT_EQ(kernel().symbol(0.99 * p.a), 1.0);
  EXPECT_EQ(kernel().symbol(1.01 * p.b), 0.0);
  EXPECT_GT(kernel().symbol(0.5 * (p.a + p.b)), 0.0);
  EXPECT_LT(kernel().symbol(0.5 * (p.a + p.b)), 1.0);
}

TEST(SuperKernel, CdfLimits) {
  EXPECT_NEAR(kernel().cdf(-1e3), 0.0, 1e-12);
  EXPECT_NEAR(kernel().cdf(1e3), 1.0, 1e-8);
  EXPECT_NEAR(kernel().cdf(0.0), 0.5, 1e-8);
  EXPECT_NEAR(mollified_sign(kernel(), 0.1, 0.0), 0.0, 1e-8);
}

TEST(SuperKernel, InvalidParameters) {
  KernelParams p;
  p.a = 3.0;
  p.b = 2.0;
  EXPECT_THROW(SuperKernel::build(p), ArgumentError);
  KernelParams q;
  q.grid_size = 1000;
  EXPECT_THROW(SuperKernel::build(q), ArgumentError);
  EXPECT_THROW(mollify([](double) { return 1.0; }, kernel(), 0.0, 0, 0.0), ArgumentError);
}

TEST(SuperKernel, ReproducesPolynomials) {
  for (double delta : {0.5, 0.1}) {
    for (double x : {-1.0, 0.0, 0.7, 3.0}) {
      EXPECT_NEAR(mollify([](double t) { return t * t; }, kernel(), delta, 0, x), x * x, 1e-6);
      EXPECT_NEAR(mollify([](double) { return 2.5; }, kernel(), delta, 0, x), 2.5, 1e-8);
      EXPECT_NEAR(mollify([](double t) { return t * t; }, kernel(), delta, 1, x), 2 * x, 1e-6);
    }
  }
}

TEST(SuperKernel, YoungBoundOnSign) {
  const double l1 = moments(kernel(), 0, 1).abs_moments(0, 1);
  for (double delta : {0.1, 0.05}) {
    double sup = 0.0;
    for (int i = -400; i <= 400; ++i) {
      sup = std::max(sup, std::abs(mollify(sign, kernel(), delta, 1, i * delta / 100.0)));
    }
    EXPECT_LE(sup, l1 / delta * (1 + 1e-9));
    EXPECT_GT(sup, 0.5 / delta);
  }
}

TEST(SuperKernel, DerivativeScaling) {
  const std::vector<double> deltas{0.2, 0.1, 0.05, 0.025};
  for (int beta : {1, 2}) {
    std::vector<double> sups;
    for (double delta : deltas) {
      double sup = 0.0;
      for (int i = -800; i <= 800; ++i) {
        sup = std::max(sup, std::abs(mollify(sign, kernel(), delta, beta, i * delta / 100.0)));
      }
      sups.push_back(sup);
    }
    const RateFit fit = fit_rate(deltas, sups);
    EXPECT_NEAR(fit.slope, -beta, 0.1) << "beta=" << beta;
  }
}

// |x|^q has q - 1 continuous derivatives; the mollification error is exactly
// delta^q int |u|^q phi(u) du at the kink.
TEST(SuperKernel, MomentOrderConvergence) {
  const std::vector<double> deltas{0.2, 0.1, 0.05, 0.025};
  for (int q : {1, 3}) {
    std::vector<double> err;
    for (double delta : deltas) {
      double sup = 0.0;
      for (int i = -200; i <= 200; ++i) {
        const double x = i * 0.005;
        const double f = std::pow(std::abs(x), q);
        sup = std::max(sup, std::abs(f - mollify([q](double t) { return std::pow(std::abs(t), q); }, kernel(), delta, 0, x)));
      }
      err.push_back(sup);
    }
    const RateFit fit = fit_rate(deltas, err);
    EXPECT_NEAR(fit.slope, q, 0.3) << "q=" << q;
  }
}

TEST(SuperKernel, TensorProduct) {
  auto f = [](double t) { return std::tanh(3 * t); };
  auto g = [](double t) { return t > 0.2 ? 1.0 : 0.0; };
  const double delta = 0.1;
  const Eigen::Vector2d x(0.05, 0.25);
  const std::vector<int> beta{1, 0};
  const double two = mollify([&](const Eigen::VectorXd& p) { return f(p[0]) * g(p[1]); }, kernel(), delta, beta, x);
  const double one = mollify(f, kernel(), delta, 1, x[0]) * mollify(g, kernel(), delta, 0, x[1]);
  EXPECT_NEAR(two, one, 1e-8);
}

TEST(SuperKernel, GridFunction) {
  GridFunction gf;
  gf.x0 = -5.0;
  gf.dx = 0.01;
  gf.values.resize(1001);
  for (Eigen::Index i = 0; i < gf.values.size(); ++i) gf.values[i] = sign(gf.x0 + i * gf.dx);
  EXPECT_NEAR(mollify(gf, kernel(), 0.1, 0, 0.0), 0.0, 1e-3);
  EXPECT_NEAR(mollify(gf, kernel(), 0.1, 0, 2.0), 1.0, 1e-6);
  EXPECT_DOUBLE_EQ(gf(100.0), 1.0);
  EXPECT_DOUBLE_EQ(gf(-100.0), -1.0);
}

TEST(SuperKernel, ExportCsv) {
  const std::string path = (std::filesystem::temp_directory_path() / "regtv_kernel_test.csv").string();
  export_csv(kernel(), path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("y,d0,d1", 0), 0u);
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, static_cast<std::size_t>(kernel().grid().size()));
  std::filesystem::remove(path);
}
