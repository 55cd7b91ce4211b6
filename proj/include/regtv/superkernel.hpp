#pragma once

#include <Eigen/Core>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace regtv {

struct KernelParams {
  double a = 4.0;   // symbol equals one on |xi| <= a
  double b = 12.0;  // symbol vanishes on |xi| >= b
  double half_width = 8.0;
  int grid_size = 1 << 14;
  int derivatives = 6;  // J
  int moments = 8;      // M
  double moment_tolerance = 1e-6;
  double tail_tolerance = 1e-10;
};

// One-dimensional kernel phi = inverse Fourier transform of a symbol that is
// flat near zero, sampled with its first J derivatives on a uniform grid.
// Multivariate kernels are tensor products of this one.
class SuperKernel {
 public:
  static SuperKernel build(const KernelParams& params = {});

  const KernelParams& params() const { return params_; }
  const Eigen::VectorXd& grid() const { return grid_; }
  double step() const { return step_; }
  int derivatives() const { return static_cast<int>(values_.size()) - 1; }
  int validated_moment_order() const { return params_.moments; }

  // phi^{(j)} on the grid.
  const Eigen::VectorXd& values(int j = 0) const;
  // phi^{(j)}(y), linear interpolation, zero outside the grid.
  double operator()(double y, int j = 0) const;
  // int_{-inf}^{t} phi.
  double cdf(double t) const;

  double symbol(double xi) const;

 private:
  KernelParams params_;
  Eigen::VectorXd grid_;
  double step_ = 0.0;
  std::vector<Eigen::VectorXd> values_;
  Eigen::VectorXd cumulative_;
};

struct MomentTable {
  Eigen::VectorXd moments;     // int y^m phi, m = 0..M
  Eigen::MatrixXd abs_moments;  // (m, j) -> int |y|^m |phi^{(j)}|
};

MomentTable moments(const SuperKernel& kernel, int max_moment, int max_derivative);

// Uniform-grid function on [x0, x0 + (n-1) dx], linear interpolation inside
// and constant extension outside.
struct GridFunction {
  double x0 = 0.0;
  double dx = 1.0;
  Eigen::VectorXd values;

  double operator()(double x) const;
};

// d^beta (f * phi_delta)(x) = int f(x - delta u) delta^{-beta} phi^{(beta)}(u) du by grid quadrature.
double mollify(const std::function<double(double)>& f, const SuperKernel& kernel, double delta, int beta, double x);
double mollify(const GridFunction& f, const SuperKernel& kernel, double delta, int beta, double x);
// Tensor-product kernel in d = x.size() dimensions; beta is an exponent vector.
double mollify(const std::function<double(const Eigen::VectorXd&)>& f, const SuperKernel& kernel, double delta,
               std::span<const int> beta, const Eigen::VectorXd& x);

// (sign * phi_delta)(x) = 2 C(x / delta) - 1 through the cumulative table.
double mollified_sign(const SuperKernel& kernel, double delta, double x);

void export_csv(const SuperKernel& kernel, const std::string& path);

}  // namespace regtv
