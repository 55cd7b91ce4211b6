#include "regtv/quadrature.hpp"

#include "regtv/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <vector>

namespace regtv {

namespace {

// Both rules are symmetric about zero; enforce it so odd moments vanish exactly.
void symmetrize(GaussianRule& rule) {
  const Eigen::Index n = rule.nodes.size();
  for (Eigen::Index i = 0; i < n / 2; ++i) {
    const Eigen::Index j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2) rule.nodes[n / 2] = 0.0;
}

}  // namespace

GaussianRule gauss_hermite(int n) {
  if (n < 1) throw ArgumentError("gauss_hermite: need at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GaussianRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = es.eigenvectors().row(0).array().square().transpose();
  symmetrize(rule);
  rule.weights /= rule.weights.sum();
  return rule;
}

GaussianRule gauss_legendre(int n) {
  if (n < 1) throw ArgumentError("gauss_legendre: need at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GaussianRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = 2.0 * es.eigenvectors().row(0).array().square().transpose();
  symmetrize(rule);
  return rule;
}

GaussianRule composite_gauss_legendre(int panels, int nodes_per_panel, double half_width) {
  if (panels < 1 || !(half_width > 0.0)) throw ArgumentError("composite_gauss_legendre: invalid rule parameters");
  const double edges[2] = {-half_width, half_width};
  return composite_gauss_legendre(edges, panels, nodes_per_panel);
}

GaussianRule composite_gauss_legendre(std::span<const double> breakpoints, int panels_per_interval,
                                      int nodes_per_panel) {
  if (breakpoints.size() < 2 || panels_per_interval < 1 || nodes_per_panel < 1) {
    throw ArgumentError("composite_gauss_legendre: invalid rule parameters");
  }
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) throw ArgumentError("composite_gauss_legendre: breakpoints must increase");
  }
  const GaussianRule base = gauss_legendre(nodes_per_panel);
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  std::vector<double> nodes;
  std::vector<double> weights;
  for (std::size_t k = 1; k < breakpoints.size(); ++k) {
    const double width = (breakpoints[k] - breakpoints[k - 1]) / panels_per_interval;
    for (int p = 0; p < panels_per_interval; ++p) {
      const double mid = breakpoints[k - 1] + (p + 0.5) * width;
      for (int i = 0; i < nodes_per_panel; ++i) {
        const double x = mid + 0.5 * width * base.nodes[i];
        nodes.push_back(x);
        weights.push_back(0.5 * width * base.weights[i] * norm * std::exp(-0.5 * x * x));
      }
    }
  }
  GaussianRule rule;
  rule.nodes = Eigen::Map<Eigen::VectorXd>(nodes.data(), static_cast<Eigen::Index>(nodes.size()));
  rule.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  rule.weights /= rule.weights.sum();
  return rule;
}

double tensor_expectation(const GaussianRule& rule, int dim, const std::function<double(const Eigen::VectorXd&)>& g) {
  if (dim < 1) throw ArgumentError("tensor_expectation: dimension must be positive");
  return tensor_expectation(std::vector<GaussianRule>(static_cast<std::size_t>(dim), rule), g);
}

double tensor_expectation(const std::vector<GaussianRule>& rules, const std::function<double(const Eigen::VectorXd&)>& g) {
  const int dim = static_cast<int>(rules.size());
  if (dim < 1) throw ArgumentError("tensor_expectation: need at least one rule");
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  Eigen::VectorXd x(dim);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int j = 0; j < dim; ++j) {
      x[j] = rules[j].nodes[idx[j]];
      w *= rules[j].weights[idx[j]];
    }
    total += w * g(x);
    int j = 0;
    while (j < dim && ++idx[j] == rules[j].nodes.size()) idx[j++] = 0;
    if (j == dim) break;
  }
  return total;
}

}  // namespace regtv
