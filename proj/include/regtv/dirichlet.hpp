#pragma once

#include "regtv/functional.hpp"
#include "regtv/jet.hpp"
#include "regtv/quadrature.hpp"
#include "regtv/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <vector>

namespace regtv {

inline constexpr int kMaxCofactorDim = 4;

using JetMatrix = std::vector<std::vector<Jet>>;

// Carre du champ <grad f, grad g>; one order lower than the inputs.
Jet gamma(const Jet& f, const Jet& g);
// Ornstein-Uhlenbeck generator  Lf = lap f - x . grad f; two orders lower.
Jet ou_generator(const Jet& f);

Jet gamma(const Functional& f, const Functional& g, const Eigen::VectorXd& point, int order);
Jet ou_generator(const Functional& f, const Eigen::VectorXd& point, int order);

Jet coordinate_jet(int i, const Jet& like);

Jet determinant(const JetMatrix& m);
JetMatrix adjugate(const JetMatrix& m);

struct CovarianceMatrix {
  JetMatrix entries;
  Jet det;

  int dim() const { return static_cast<int>(entries.size()); }
  Eigen::MatrixXd value() const;
};

CovarianceMatrix malliavin_matrix(const std::vector<Jet>& f);
CovarianceMatrix malliavin_matrix(const Functional& f, const Eigen::VectorXd& point, int order);

// psi: 0 up to eta/2, 1 from eta on.  phi: 1 up to eta, 0 from 2 eta on.
enum class StepKind { psi, phi };

double smooth_step(StepKind kind, double eta, double x);
Jet smooth_step(StepKind kind, double eta, const Jet& x);

// Psi_eta(f) / f, identically zero where Psi_eta(f) vanishes.
Jet localized_inverse(const Jet& f, double eta);
double localized_inverse(double f, double eta);

class GaussianSpace {
 public:
  explicit GaussianSpace(int dim, int quadrature_order = 40, std::uint64_t seed = 0,
                         std::size_t mc_samples = 200000);

  int dim() const { return dim_; }
  int quadrature_order() const { return quadrature_order_; }
  std::uint64_t seed() const { return seed_; }

  // Tensor Gauss-Hermite for dim <= 4 (reported exact), seeded Monte Carlo beyond.
  Estimate expectation(const std::function<double(const Eigen::VectorXd&)>& g) const;
  Estimate expectation(const std::function<double(const Eigen::VectorXd&)>& g, const GaussianRule& rule) const;
  Estimate monte_carlo(const std::function<double(const Eigen::VectorXd&)>& g, std::size_t n) const;

  Eigen::MatrixXd sample(std::size_t n) const;

 private:
  int dim_;
  int quadrature_order_;
  std::uint64_t seed_;
  std::size_t mc_samples_;
  GaussianRule rule_;
};

}  // namespace regtv
