#pragma once

#include "regtv/dirichlet.hpp"
#include "regtv/functional.hpp"
#include "regtv/jet.hpp"
#include "regtv/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace regtv {

// alpha lists component indices of F (0-based), applied innermost first:
// H_alpha(F,G) = H_{alpha.back()}(F, H_{alpha without last}(F,G)).
struct WeightRequest {
  Functional f;
  std::optional<Functional> g;  // G = 1 when empty
  MultiIndex alpha;
  std::optional<double> eta;
  Eigen::VectorXd point;
  int order = 0;  // order of the returned jet
};

// Jet-level weight. F must carry order >= output + |alpha| + 1, G at least
// output + |alpha|. With eta, the first step uses adj(sigma) Psi_eta(det)/det and
// later steps use the inverse cut at eta/2, which coincides with sigma^{-1} on
// the support of the previous weight, so that
//   E(d_alpha phi(F) G Psi_eta(det sigma_F)) = E(phi(F) H_{eta,alpha}(F,G)).
Jet weight(const std::vector<Jet>& f, const Jet& g, std::span<const int> alpha, std::optional<double> eta);

Jet weight(const WeightRequest& req);
Jet weight_localized(const WeightRequest& req);

// Order-0 value of the weight at one point (G = 1 when g is empty).
double weight_value(const Functional& f, const std::optional<Functional>& g, std::span<const int> alpha,
                    std::optional<double> eta, const Eigen::VectorXd& point);

struct NormReport {
  Eigen::VectorXd point;
  int k = 0;
  int n = 0;
  std::vector<double> sobolev_1k;  // |F_i|_{1,k}
  std::vector<double> sobolev_k;   // |F_i|_k
  double sobolev_1k_total = 0.0;
  double sobolev_k_total = 0.0;
  double alpha_k = 0.0;
  double beta_k = 0.0;
  double k_nk = 0.0;
  double c_n = 0.0;
  bool singular = false;  // alpha_k, beta_k are +inf
};

// |D^i F|: Euclidean norm of the full order-i tensor (coordinate basis).
double derivative_tensor_norm(const Jet& f, int i);
// sum_{1 <= i <= k} |D^i F| for one jet.
double sobolev_seminorm(const Jet& f, int k);

NormReport sobolev_norm(const std::vector<Jet>& f, int k);
NormReport sobolev_norm(const Functional& f, int k, const Eigen::VectorXd& point);
NormReport nondegeneracy_stats(const Functional& f, int n, int k, const Eigen::VectorXd& point);

struct MomentEstimate {
  double value = 0.0;
  double se = 0.0;
  bool heavy_tail = false;
};

inline constexpr std::size_t kMinMomentSamples = 100;

// (mean |x|^p)^{1/p} with a grouped jackknife standard error.
MomentEstimate lp_moment(std::span<const double> samples, double p);
MomentEstimate lp_moment(const std::function<double(NormalSampler&, std::size_t)>& quantity, double p,
                         std::size_t n, std::uint64_t seed);

struct QEstimate {
  double value = 0.0;
  double se = 0.0;
  MomentEstimate c_norm;           // C_{l,2}(F)
  MomentEstimate inverse_det_moment;  // E (det sigma_F)^{-2l}
  bool heavy_tail = false;
};

// Q_l(F) = C_{l,2}(F) (E det sigma_F^{-2l})^{1/2} from Monte Carlo samples.
QEstimate q_norm(const Functional& f, int l, std::size_t n, std::uint64_t seed);

struct DensityEstimate {
  Eigen::VectorXd value;
  Eigen::VectorXd se;
  double max_variance = 0.0;
  bool precision_warning = false;
};

// d^beta p_F on the grid from p_F(x) = E(prod_i 1{F_i > x_i} H_{(0..d-1)}(F,1)).
// beta lists component indices; the weight index is (0..d-1) followed by beta.
DensityEstimate density_ibp(const Functional& f, const std::vector<Eigen::VectorXd>& grid, const MultiIndex& beta,
                            std::size_t n, std::optional<double> eta, std::uint64_t seed,
                            double variance_cap = 1.0e4);

}  // namespace regtv
