#pragma once

#include "regtv/distances.hpp"
#include "regtv/functional.hpp"
#include "regtv/jet.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace regtv {

// Coefficients b and sigma_1..sigma_m of dX = sum_j sigma_j(X) dB^j + b(X) dt.
// Each model is written once as a scalar template; the three entry points
// below are its instantiations for doubles, first-order duals (state
// Jacobians) and full jets.
struct SdeModel {
  std::string name;
  int state_dim = 1;
  int noise_dim = 1;
  Eigen::VectorXd x0;
  double horizon = 1.0;

  // b(x) into out[0..d), sigma_j(x)_i into out[i + d * j].
  std::function<void(std::span<const double> x, std::span<double> b, std::span<double> sigma)> coefficients;
  // Values plus Jacobians: db(i, l) = d b_i / d x_l, dsigma[j](i, l) = d sigma_{j,i} / d x_l.
  std::function<void(std::span<const double> x, Eigen::VectorXd& b, Eigen::MatrixXd& db, Eigen::MatrixXd& sigma,
                     std::vector<Eigen::MatrixXd>& dsigma)>
      linearization;
  // Jet-valued coefficients; sigma[j] is the field sigma_j.
  std::function<void(const std::vector<Jet>& x, std::vector<Jet>& b, std::vector<std::vector<Jet>>& sigma)> jets;
};

// Built-ins: brownian, linear-ou, elliptic-2d, hormander-grushin.
SdeModel make_model(const std::string& name);
std::vector<std::string> model_names();

// Functional of the n * m Gaussian coordinates g (step-major: g[k * m + j])
// whose value is the Euler terminal state with increments sqrt(T/n) g.
Functional euler_functional(const SdeModel& model, const Eigen::VectorXd& x0, double horizon, int n,
                            int max_order = kDefaultMaxOrder);
Eigen::VectorXd euler_terminal(const SdeModel& model, const Eigen::VectorXd& x0, double horizon, int n,
                               std::span<const double> g);

// Malliavin covariance of the Euler terminal value by the tangent-flow recursion
// M_{k+1} = J_k M_k J_k^T + (T/n) sum_j sigma_j(X_k) sigma_j(X_k)^T.
Eigen::MatrixXd euler_malliavin(const SdeModel& model, const Eigen::VectorXd& x0, double horizon, int n,
                                std::span<const double> g);

// Paths on the fine grid n_ref and on every coarser level sharing the same
// Brownian path (coarse increments are sums of fine ones).
struct CoupledPaths {
  std::vector<int> levels;
  std::vector<EmpiricalLaw> coarse;  // terminal states, one law per level
  EmpiricalLaw reference;            // terminal states on the fine grid
  // det of the Malliavin covariance per path (only when requested)
  std::vector<Eigen::VectorXd> coarse_det;
  Eigen::VectorXd reference_det;
};

CoupledPaths simulate_coupled(const SdeModel& model, std::span<const int> levels, int n_ref, std::size_t paths,
                              std::uint64_t seed, bool with_det = false);

struct BracketReport {
  int depth = 0;
  std::vector<std::vector<Eigen::VectorXd>> sets;  // A_0..A_depth evaluated at x
  std::vector<double> lambda;                      // Lambda over A_0 u ... u A_k, k = 0..depth
};

// Lie brackets [phi, psi] = (D psi) phi - (D phi) psi by jet propagation.
BracketReport hormander(const SdeModel& model, const Eigen::VectorXd& x, int depth);
std::vector<Jet> lie_bracket(const std::vector<Jet>& phi, const std::vector<Jet>& psi);

}  // namespace regtv
