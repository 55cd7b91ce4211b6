#include "regtv/distances.hpp"
#include "regtv/errors.hpp"
#include "regtv/ibp.hpp"
#include "regtv/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace regtv;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

Functional scalar1(std::function<Jet(const Jet&)> f) {
  return scalar_functional(1, [f](const std::vector<Jet>& x) { return f(x[0]); });
}

double h(const Functional& f, std::initializer_list<int> alpha, std::optional<double> eta, double x,
         const std::optional<Functional>& g = std::nullopt) {
  const std::vector<int> a(alpha);
  return weight_value(f, g, a, eta, vec({x}));
}

// Normal-weighted rule on [-12, 12] with panel edges on every cutoff junction of
// Psi_eta(4 x^2) and Psi_{eta/2}(4 x^2).
GaussianRule square_rule(double eta) {
  std::vector<double> bp{-12.0, 0.0, 12.0};
  for (double level : {eta / 4, eta / 2, eta}) {
    const double r = std::sqrt(level / 4.0);
    bp.push_back(r);
    bp.push_back(-r);
  }
  std::sort(bp.begin(), bp.end());
  return composite_gauss_legendre(bp, 12, 10);
}

double integrate(const GaussianRule& r, const std::function<double(double)>& g) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * g(r.nodes[i]);
  return s;
}

}  // namespace

TEST(Weight, GaussianIbpExamples) {
  const Functional x = scalar1([](const Jet& t) { return t; });
  for (double p : {-1.3, 0.0, 0.4, 2.2}) {
    EXPECT_NEAR(h(x, {0}, std::nullopt, p), p, 1e-14);
    EXPECT_NEAR(h(x, {0, 0}, std::nullopt, p), p * p - 1.0, 1e-13);
  }
  for (double a : {0.5, 3.0}) {
    const Functional f = scalar1([a](const Jet& t) { return a * t; });
    for (double p : {-0.7, 1.1}) EXPECT_NEAR(h(f, {0}, std::nullopt, p), p / a, 1e-14);
  }
}

TEST(Weight, IdentityForClassicalGaussianIbp) {
  const GaussianRule r = gauss_hermite(40);
  const Functional x = scalar1([](const Jet& t) { return t; });
  const double lhs = integrate(r, [](double t) { return -std::sin(t); });
  const double rhs = integrate(r, [&](double t) { return std::cos(t) * h(x, {0}, std::nullopt, t); });
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(Weight, SingularWithoutLocalization) {
  const Functional sq = scalar1([](const Jet& t) { return t * t; });
  EXPECT_THROW(h(sq, {0}, std::nullopt, 0.0), SingularityError);
}

TEST(Weight, LocalizedPlateauEqualsPlainWeight) {
  const Functional x = scalar1([](const Jet& t) { return t; });
  for (double p : {-1.0, 0.3, 2.0}) EXPECT_NEAR(h(x, {0}, 0.4, p), p, 1e-14);
}

TEST(Weight, LocalizedVanishesBelowCutoff) {
  const Functional f = scalar1([](const Jet& t) { return 0.1 * t; });
  for (double p : {-3.0, 0.0, 1.5}) {
    EXPECT_EQ(h(f, {0}, 1.0, p), 0.0);
    EXPECT_EQ(h(f, {0, 0}, 1.0, p), 0.0);
  }
}

TEST(Weight, LocalizedIdentityForSquare) {
  const double eta = 0.5;
  const Functional f = scalar1([](const Jet& t) { return t * t; });
  const GaussianRule r = square_rule(eta);
  const double lhs = integrate(r, [&](double t) {
    return -std::sin(t * t) * smooth_step(StepKind::psi, eta, 4 * t * t);
  });
  const double rhs = integrate(r, [&](double t) { return std::cos(t * t) * h(f, {0}, eta, t); });
  EXPECT_NEAR(lhs, rhs, 1e-6);
}

TEST(Weight, UnlocalizedIdentityOnAffineMaps) {
  Eigen::MatrixXd a(2, 3);
  a << 1.0, 0.5, -0.3, 0.2, -1.0, 0.7;
  const Functional f = affine_functional(a, vec({0.1, -0.2}));
  const GaussianRule r = gauss_hermite(14);
  // phi(u, v) = cos(u) exp(-v^2 / 4): d_u d_v phi and H_(0,1)
  const std::vector<int> alpha{0, 1};
  const double lhs = tensor_expectation(r, 3, [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd y = a * x + vec({0.1, -0.2});
    return std::sin(y[0]) * 0.5 * y[1] * std::exp(-y[1] * y[1] / 4);
  });
  const double rhs = tensor_expectation(r, 3, [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd y = a * x + vec({0.1, -0.2});
    return std::cos(y[0]) * std::exp(-y[1] * y[1] / 4) * weight_value(f, std::nullopt, alpha, std::nullopt, x);
  });
  EXPECT_NEAR(lhs, rhs, 1e-8);
}

// E(d^a phi(F) Psi_eta(det)) for F = x^2 and a sign-like phi stays below c eta^{-2|a|}.
TEST(Weight, LocalizedExpectationScaling) {
  const std::vector<double> etas{0.5, 0.25, 0.125, 0.0625};
  for (int order : {1, 2}) {
    std::vector<double> vals;
    for (double eta : etas) {
      const GaussianRule r = square_rule(eta);
      vals.push_back(std::abs(integrate(r, [&](double t) {
        const double u = t * t / eta;
        const double s = 1.0 / std::cosh(u);
        const double d = order == 1 ? s * s / eta : -2.0 * s * s * std::tanh(u) / (eta * eta);
        return d * smooth_step(StepKind::psi, eta, 4 * t * t);
      })));
    }
    const RateFit fit = fit_rate(etas, vals);
    EXPECT_GE(fit.slope, -2.0 * order - 0.3) << "order " << order;
  }
}

// ||H_{eta,a}(F, Psi_eta(det))||_1 grows no faster than eta^{-2|a|}.
TEST(Weight, LocalizedWeightNormScaling) {
  const std::vector<double> etas{0.5, 0.25, 0.125, 0.0625};
  const Functional f = scalar1([](const Jet& t) { return t * t; });
  for (int order : {1, 2}) {
    std::vector<double> vals;
    for (double eta : etas) {
      const Functional g = scalar1([eta](const Jet& t) { return smooth_step(StepKind::psi, eta, 4.0 * t * t); });
      const GaussianRule r = square_rule(eta);
      vals.push_back(integrate(r, [&](double t) {
        return std::abs(order == 1 ? h(f, {0}, eta, t, g) : h(f, {0, 0}, eta, t, g));
      }));
    }
    const RateFit fit = fit_rate(etas, vals);
    EXPECT_GE(fit.slope, -2.0 * order - 0.3) << "order " << order;
  }
}

TEST(SobolevNorm, Examples) {
  const Functional x = scalar1([](const Jet& t) { return t; });
  const NormReport a = sobolev_norm(x, 2, vec({3.0}));
  EXPECT_DOUBLE_EQ(a.sobolev_1k_total, 1.0);
  EXPECT_DOUBLE_EQ(a.sobolev_k_total, 4.0);

  const Functional sq = scalar1([](const Jet& t) { return t * t; });
  const NormReport b = sobolev_norm(sq, 2, vec({1.0}));
  EXPECT_DOUBLE_EQ(b.sobolev_1k_total, 4.0);

  const Functional pair(2, 2, [](const std::vector<Jet>& v) { return v; });
  EXPECT_DOUBLE_EQ(sobolev_norm(pair, 1, vec({0.5, -2.0})).sobolev_1k_total, 2.0);
}

TEST(NondegeneracyStats, Examples) {
  const Functional x = scalar1([](const Jet& t) { return t; });
  const NormReport r = nondegeneracy_stats(x, 1, 0, vec({0.0}));
  EXPECT_DOUBLE_EQ(r.c_n, 32.0);
  EXPECT_DOUBLE_EQ(r.k_nk, r.c_n);
  for (int k = 0; k <= 3; ++k) EXPECT_DOUBLE_EQ(nondegeneracy_stats(x, 1, k, vec({0.7})).beta_k, 1.0);

  const Functional f = scalar1([](const Jet& t) { return sin(t) + t * t; });
  const Functional f2 = scalar1([](const Jet& t) { return 2.0 * (sin(t) + t * t); });
  for (double p : {-1.0, 0.3, 1.8}) {
    for (int n = 1; n <= 3; ++n) {
      EXPECT_GE(nondegeneracy_stats(f2, n, 0, vec({p})).c_n, nondegeneracy_stats(f, n, 0, vec({p})).c_n);
    }
  }
}

TEST(NondegeneracyStats, SingularFlag) {
  const Functional sq = scalar1([](const Jet& t) { return t * t; });
  const NormReport r = nondegeneracy_stats(sq, 1, 1, vec({0.0}));
  EXPECT_TRUE(r.singular);
  EXPECT_TRUE(std::isinf(r.alpha_k));
  EXPECT_GE(r.c_n, 0.0);
}

TEST(LpMoment, Examples) {
  std::vector<double> c(500, -2.5);
  for (double p : {1.0, 2.0, 5.0}) EXPECT_NEAR(lp_moment(c, p).value, 2.5, 1e-12);

  const MomentEstimate sq = lp_moment([](NormalSampler& s, std::size_t) {
    const double d = s();
    return d * d;
  }, 1.0, 200000, 3);
  EXPECT_NEAR(sq.value, 1.0, 3 * sq.se + 1e-12);
  EXPECT_FALSE(sq.heavy_tail);

  const MomentEstimate inv = lp_moment([](NormalSampler& s, std::size_t) {
    const double d = s();
    return 1.0 / (4 * d * d);
  }, 1.0, 200000, 3);
  EXPECT_TRUE(inv.heavy_tail);
}

TEST(LpMoment, Errors) {
  std::vector<double> bad(200, 1.0);
  bad[7] = std::nan("");
  EXPECT_THROW(lp_moment(bad, 1.0), DataError);
  std::vector<double> few(10, 1.0);
  EXPECT_THROW(lp_moment(few, 1.0), ArgumentError);
  std::vector<double> ok(200, 1.0);
  EXPECT_THROW(lp_moment(ok, 0.5), ArgumentError);
}

TEST(DensityIbp, StandardNormal) {
  const Functional x = scalar1([](const Jet& t) { return t; });
  const std::vector<Eigen::VectorXd> grid{vec({0.0}), vec({1.0})};
  const DensityEstimate p = density_ibp(x, grid, {}, 400000, std::nullopt, 17);
  const double phi0 = 1.0 / std::sqrt(2 * std::numbers::pi);
  EXPECT_NEAR(p.value[0], phi0, 3 * p.se[0]);
  EXPECT_NEAR(p.value[1], phi0 * std::exp(-0.5), 3 * p.se[1]);
  const DensityEstimate dp = density_ibp(x, grid, {0}, 400000, std::nullopt, 17);
  EXPECT_NEAR(dp.value[0], 0.0, 3 * dp.se[0]);
  EXPECT_NEAR(dp.value[1], -phi0 * std::exp(-0.5), 3 * dp.se[1]);
}

TEST(DensityIbp, ScaledNormal) {
  const double a = 2.0;
  const Functional f = scalar1([a](const Jet& t) { return a * t; });
  const DensityEstimate p = density_ibp(f, {vec({0.0})}, {}, 400000, std::nullopt, 21);
  EXPECT_NEAR(p.value[0], 1.0 / std::sqrt(2 * std::numbers::pi * a * a), 3 * p.se[0]);
}

TEST(DensityIbp, VarianceCapWarning) {
  const Functional f = scalar1([](const Jet& t) { return 0.05 * t; });
  const DensityEstimate p = density_ibp(f, {vec({0.0})}, {}, 20000, std::nullopt, 1, 1.0);
  EXPECT_TRUE(p.precision_warning);
}
