#include "regtv/superkernel.hpp"

#include "regtv/errors.hpp"
#include "regtv/jet.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>

namespace regtv {

double SuperKernel::symbol(double xi) const {
  const double r = std::abs(xi);
  if (r <= params_.a) return 1.0;
  if (r >= params_.b) return 0.0;
  return 1.0 - smooth_step((r - params_.a) / (params_.b - params_.a));
}

SuperKernel SuperKernel::build(const KernelParams& params) {
  if (!(params.a > 0.0) || !(params.b > params.a)) throw ArgumentError("super kernel: need 0 < a < b");
  if (!(params.half_width > 0.0)) throw ArgumentError("super kernel: half width must be positive");
  const int n = params.grid_size;
  if (n < 16 || (n & (n - 1)) != 0) throw ArgumentError("super kernel: grid size must be a power of two >= 16");
  if (params.derivatives < 0 || params.moments < 0) throw ArgumentError("super kernel: negative J or M");

  SuperKernel k;
  k.params_ = params;
  k.step_ = 2.0 * params.half_width / n;
  const double dxi = 1.0 / (n * k.step_);
  if (params.b >= 0.5 * n * dxi) throw ArgumentError("super kernel: grid too coarse for the symbol support");
  k.grid_.resize(n);
  for (int j = 0; j < n; ++j) k.grid_[j] = (j - n / 2) * k.step_;

  // x_j = (j - n/2) h, xi_k = (k - n/2) dxi, h dxi = 1/n; with n/2 even the
  // phase factors reduce to (-1)^{j+k}.
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum(n);
  std::vector<std::complex<double>> out(n);
  for (int order = 0; order <= params.derivatives; ++order) {
    for (int q = 0; q < n; ++q) {
      const double xi = (q - n / 2) * dxi;
      std::complex<double> s = k.symbol(xi);
      if (order > 0) s *= std::pow(std::complex<double>(0.0, 2.0 * std::numbers::pi * xi), order);
      spectrum[q] = (q % 2 == 0) ? s : -s;
    }
    fft.inv(out, spectrum);
    Eigen::VectorXd v(n);
    for (int j = 0; j < n; ++j) v[j] = dxi * n * ((j % 2 == 0) ? out[j].real() : -out[j].real());
    k.values_.push_back(std::move(v));
  }

  const double mass = k.values_[0].sum() * k.step_;
  for (auto& v : k.values_) v /= mass;

  k.cumulative_.resize(n);
  k.cumulative_[0] = 0.0;
  for (int j = 1; j < n; ++j) {
    k.cumulative_[j] = k.cumulative_[j - 1] + 0.5 * k.step_ * (k.values_[0][j] + k.values_[0][j - 1]);
  }

  const int tail = std::max(1, n / 64);
  double edge = 0.0;
  for (int j = 0; j < tail; ++j) edge = std::max({edge, std::abs(k.values_[0][j]), std::abs(k.values_[0][n - 1 - j])});
  if (edge > params.tail_tolerance) {
    throw ConstructionError("super kernel: |phi| = " + std::to_string(edge) + " near the grid edge; increase R");
  }

  const MomentTable table = moments(k, params.moments, 0);
  for (int m = 1; m <= params.moments; ++m) {
    if (std::abs(table.moments[m]) > params.moment_tolerance) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "super kernel: moment %d equals %.3e, above tolerance %.1e", m,
                    table.moments[m], params.moment_tolerance);
      throw ConstructionError(buf);
    }
  }
  return k;
}

const Eigen::VectorXd& SuperKernel::values(int j) const {
  if (j < 0 || j > derivatives()) throw CapabilityError("super kernel: derivative order not stored");
  return values_[j];
}

double SuperKernel::operator()(double y, int j) const {
  const Eigen::VectorXd& v = values(j);
  const double t = (y - grid_[0]) / step_;
  if (t < 0.0 || t > grid_.size() - 1) return 0.0;
  const int i = std::min(static_cast<int>(t), static_cast<int>(grid_.size()) - 2);
  const double w = t - i;
  return (1.0 - w) * v[i] + w * v[i + 1];
}

double SuperKernel::cdf(double t) const {
  const double u = (t - grid_[0]) / step_;
  if (u <= 0.0) return 0.0;
  if (u >= grid_.size() - 1) return 1.0;
  const int i = static_cast<int>(u);
  const double w = u - i;
  return (1.0 - w) * cumulative_[i] + w * cumulative_[i + 1];
}

MomentTable moments(const SuperKernel& kernel, int max_moment, int max_derivative) {
  if (max_moment < 0 || max_derivative < 0) throw ArgumentError("moments: negative order");
  const Eigen::VectorXd& y = kernel.grid();
  const double h = kernel.step();
  MomentTable t;
  t.moments = Eigen::VectorXd::Zero(max_moment + 1);
  t.abs_moments = Eigen::MatrixXd::Zero(max_moment + 1, max_derivative + 1);
  const Eigen::VectorXd& phi = kernel.values(0);
  for (int m = 0; m <= max_moment; ++m) {
    t.moments[m] = (y.array().pow(m) * phi.array()).sum() * h;
    for (int j = 0; j <= max_derivative; ++j) {
      t.abs_moments(m, j) = (y.array().abs().pow(m) * kernel.values(j).array().abs()).sum() * h;
    }
  }
  return t;
}

double GridFunction::operator()(double x) const {
  const Eigen::Index n = values.size();
  if (n == 0) throw ArgumentError("grid function has no values");
  const double t = (x - x0) / dx;
  if (t <= 0.0) return values[0];
  if (t >= n - 1) return values[n - 1];
  const Eigen::Index i = static_cast<Eigen::Index>(t);
  const double w = t - i;
  return (1.0 - w) * values[i] + w * values[i + 1];
}

namespace {

void check_delta(double delta) {
  if (!(delta > 0.0)) throw ArgumentError("mollify: delta must be positive");
}

}  // namespace

double mollify(const std::function<double(double)>& f, const SuperKernel& kernel, double delta, int beta, double x) {
  check_delta(delta);
  const Eigen::VectorXd& u = kernel.grid();
  const Eigen::VectorXd& k = kernel.values(beta);
  double s = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) s += f(x - delta * u[j]) * k[j];
  return s * kernel.step() * std::pow(delta, -beta);
}

double mollify(const GridFunction& f, const SuperKernel& kernel, double delta, int beta, double x) {
  return mollify(std::function<double(double)>([&f](double y) { return f(y); }), kernel, delta, beta, x);
}

double mollify(const std::function<double(const Eigen::VectorXd&)>& f, const SuperKernel& kernel, double delta,
               std::span<const int> beta, const Eigen::VectorXd& x) {
  check_delta(delta);
  const int d = static_cast<int>(x.size());
  if (static_cast<int>(beta.size()) != d) throw ArgumentError("mollify: beta and x dimensions differ");
  const Eigen::VectorXd& u = kernel.grid();
  const Eigen::Index n = u.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd y(d);
  double s = 0.0;
  int total_beta = 0;
  for (int b : beta) total_beta += b;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      y[i] = x[i] - delta * u[idx[i]];
      w *= kernel.values(beta[i])[idx[i]];
    }
    if (w != 0.0) s += w * f(y);
    int i = 0;
    while (i < d && ++idx[i] == n) idx[i++] = 0;
    if (i == d) break;
  }
  return s * std::pow(kernel.step(), d) * std::pow(delta, -total_beta);
}

double mollified_sign(const SuperKernel& kernel, double delta, double x) {
  check_delta(delta);
  return 2.0 * kernel.cdf(x / delta) - 1.0;
}

void export_csv(const SuperKernel& kernel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write kernel CSV to " + path);
  out << "y";
  for (int j = 0; j <= kernel.derivatives(); ++j) out << ",d" << j;
  out << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < kernel.grid().size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", kernel.grid()[i]);
    out << buf;
    for (int j = 0; j <= kernel.derivatives(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", kernel.values(j)[i]);
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("failed while writing " + path);
}

}  // namespace regtv
