#pragma once

#include <Eigen/Core>

#include <functional>
#include <span>
#include <vector>

namespace regtv {

// One-dimensional rule for expectations under the standard normal law:
// E g(X) ~ sum_i weights[i] g(nodes[i]), weights summing to one.
struct GaussianRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// Probabilists' Gauss-Hermite rule (Golub-Welsch); exact for polynomials of degree < 2n.
GaussianRule gauss_hermite(int n);
// Plain Gauss-Legendre on [-1, 1] (weights sum to 2, no normal weighting).
GaussianRule gauss_legendre(int n);

// Gauss-Legendre panels on [-half_width, half_width] weighted by the normal
// density. Resolves integrands with sharp but smooth transitions where a
// global Hermite rule would need a very large node count.
GaussianRule composite_gauss_legendre(int panels, int nodes_per_panel, double half_width = 10.0);
// Same with panel edges placed on the given breakpoints (sorted, at least two):
// each interval between breakpoints is split into `panels_per_interval` panels.
// Placing breakpoints on the junctions of piecewise-defined integrands keeps
// every panel smooth.
GaussianRule composite_gauss_legendre(std::span<const double> breakpoints, int panels_per_interval,
                                      int nodes_per_panel);

// Tensor-product expectation over `dim` independent standard normals.
double tensor_expectation(const GaussianRule& rule, int dim, const std::function<double(const Eigen::VectorXd&)>& g);
// Tensor product of one rule per coordinate.
double tensor_expectation(const std::vector<GaussianRule>& rules, const std::function<double(const Eigen::VectorXd&)>& g);

}  // namespace regtv
