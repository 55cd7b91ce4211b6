#pragma once

#include "regtv/distances.hpp"
#include "regtv/functional.hpp"
#include "regtv/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace regtv {

// Second-chaos vector F_i(x) = x^T A_i x - tr A_i on m Gaussian inputs.
class QuadraticChaos {
 public:
  // Throws ArgumentError on non-square, mismatched or asymmetric matrices, and
  // when identity_covariance is claimed but 2 tr(A_i A_j) != delta_ij.
  QuadraticChaos(std::vector<Eigen::MatrixXd> components, bool identity_covariance);

  int dim() const { return static_cast<int>(a_.size()); }
  int inputs() const { return static_cast<int>(a_[0].rows()); }
  const Eigen::MatrixXd& component(int i) const { return a_[i]; }
  bool identity_covariance() const { return identity_covariance_; }

  Eigen::VectorXd value(const Eigen::VectorXd& x) const;
  // Gamma[F_i, F_j](x) = 4 x^T A_i A_j x.
  double gamma(int i, int j, const Eigen::VectorXd& x) const;

 private:
  std::vector<Eigen::MatrixXd> a_;
  bool identity_covariance_;
};

// Matrices separated by blank lines, one comma-separated row per line.
QuadraticChaos load_chaos_csv(const std::string& path, bool identity_covariance);

// d = 1 family A = I_m / sqrt(2m) plus a symmetric band of relative size
// `band`, renormalised so that 2 tr A^2 = 1.
QuadraticChaos chaos_family(int m, double band = 0.0);

Functional chaos_functional(const QuadraticChaos& chaos);

struct FourthMomentReport {
  Estimate fourth_gap;     // E|F|^4 - E|N|^4 (trace formula when d = 1)
  Estimate lhs;            // sum_ij E (delta_ij - Gamma_ij / 2)^2
  Estimate fourth_gap_mc;  // Monte Carlo versions of the two
  Estimate lhs_mc;
  DistanceEstimate det_distance;  // d_W(det sigma_F, det D) with D = 2 I
  double det_reference = 0.0;
};

FourthMomentReport fourth_moment_stats(const QuadraticChaos& chaos, std::size_t samples, std::uint64_t seed);

// Samples of F (n x d) from the block-seeded generator.
EmpiricalLaw sample_chaos(const QuadraticChaos& chaos, std::size_t n, std::uint64_t seed);

double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace regtv
