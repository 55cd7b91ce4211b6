#include "regtv/functional.hpp"

#include "regtv/errors.hpp"

#include <string>

namespace regtv {

Functional::Functional(int input_dim, int output_dim, Body body, int max_order)
    : input_dim_(input_dim), output_dim_(output_dim), max_order_(max_order), body_(std::move(body)) {
  if (input_dim < 0 || output_dim < 1) throw ArgumentError("functional: invalid dimensions");
  if (max_order < 0) throw ArgumentError("functional: negative maximal order");
}

std::vector<Jet> Functional::evaluate(const Eigen::VectorXd& point, int order) const {
  if (point.size() != input_dim_) {
    throw ArgumentError("functional: point has dimension " + std::to_string(point.size()) + ", expected " +
                        std::to_string(input_dim_));
  }
  if (order < 0) throw ArgumentError("functional: negative order");
  if (order > max_order_) {
    throw CapabilityError("functional: order " + std::to_string(order) + " exceeds supported order " +
                          std::to_string(max_order_));
  }
  std::vector<Jet> out = body_(lift(point, order));
  if (static_cast<int>(out.size()) != output_dim_) throw ArgumentError("functional: body returned wrong arity");
  for (auto& j : out) {
    if (j.order() < order) throw CapabilityError("functional: body returned a jet of insufficient order");
    if (j.order() > order) j = j.truncated(order);
  }
  return out;
}

Eigen::VectorXd Functional::value(const Eigen::VectorXd& point) const {
  auto jets = evaluate(point, 0);
  Eigen::VectorXd v(output_dim_);
  for (int i = 0; i < output_dim_; ++i) v[i] = jets[i].value();
  return v;
}

Jet Functional::component(const Eigen::VectorXd& point, int order, int i) const {
  if (i < 0 || i >= output_dim_) throw ArgumentError("functional: component index out of range");
  return evaluate(point, order)[i];
}

double Functional::derivative(const Eigen::VectorXd& point, std::span<const int> alpha, int i) const {
  int k = 0;
  for (int e : alpha) k += e;
  return component(point, k, i).derivative(alpha);
}

Functional Functional::component_functional(int i) const {
  if (i < 0 || i >= output_dim_) throw ArgumentError("functional: component index out of range");
  Body body = [body = body_, i](const std::vector<Jet>& x) { return std::vector<Jet>{body(x)[i]}; };
  return Functional(input_dim_, 1, std::move(body), max_order_);
}

Functional scalar_functional(int input_dim, std::function<Jet(const std::vector<Jet>&)> body, int max_order) {
  return Functional(
      input_dim, 1, [body = std::move(body)](const std::vector<Jet>& x) { return std::vector<Jet>{body(x)}; },
      max_order);
}

Functional constant_functional(int input_dim, double c) {
  if (input_dim < 1) throw ArgumentError("constant functional needs at least one input");
  return Functional(input_dim, 1, [c](const std::vector<Jet>& x) {
    return std::vector<Jet>{Jet::constant(c, x.at(0).layout_ptr(), x.at(0).point_ptr())};
  });
}

Functional affine_functional(const Eigen::MatrixXd& a, const Eigen::VectorXd& c) {
  if (a.rows() != c.size()) throw ArgumentError("affine functional: shape mismatch");
  const int m = static_cast<int>(a.cols());
  const int d = static_cast<int>(a.rows());
  return Functional(m, d, [a, c](const std::vector<Jet>& x) {
    std::vector<Jet> out;
    for (int i = 0; i < a.rows(); ++i) {
      Jet acc = x[0] * a(i, 0) + c[i];
      for (int j = 1; j < a.cols(); ++j) acc += x[j] * a(i, j);
      out.push_back(std::move(acc));
    }
    return out;
  });
}

}  // namespace regtv
