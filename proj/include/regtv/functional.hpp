#pragma once

#include "regtv/jet.hpp"

#include <Eigen/Core>

#include <functional>
#include <span>
#include <vector>

namespace regtv {

// Smooth map R^m -> R^d assembled from the elementary jet operations. The body
// receives the coordinate jets of the evaluation point and returns d jets.
class Functional {
 public:
  using Body = std::function<std::vector<Jet>(const std::vector<Jet>&)>;

  Functional(int input_dim, int output_dim, Body body, int max_order = kDefaultMaxOrder);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  int max_order() const { return max_order_; }

  std::vector<Jet> evaluate(const Eigen::VectorXd& point, int order) const;
  Eigen::VectorXd value(const Eigen::VectorXd& point) const;
  Jet component(const Eigen::VectorXd& point, int order, int i = 0) const;

  // d^alpha F_i(point) with alpha an exponent vector over the m inputs.
  double derivative(const Eigen::VectorXd& point, std::span<const int> alpha, int i = 0) const;

  Functional component_functional(int i) const;

 private:
  int input_dim_;
  int output_dim_;
  int max_order_;
  Body body_;
};

// Scalar functional from a single-output body.
Functional scalar_functional(int input_dim, std::function<Jet(const std::vector<Jet>&)> body,
                             int max_order = kDefaultMaxOrder);
Functional constant_functional(int input_dim, double c);
// x -> A x + c.
Functional affine_functional(const Eigen::MatrixXd& a, const Eigen::VectorXd& c);

}  // namespace regtv
