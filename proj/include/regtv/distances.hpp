#pragma once

#include "regtv/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace regtv {

// Density values on a regular tensor grid; index (i0, i1) -> values[i0 + n0 * i1].
struct DensityGrid {
  Eigen::VectorXd origin;
  Eigen::VectorXd spacing;
  std::vector<int> shape;
  Eigen::VectorXd values;

  int dim() const { return static_cast<int>(shape.size()); }
  double cell_volume() const { return spacing.prod(); }
};

class EmpiricalLaw {
 public:
  EmpiricalLaw(Eigen::MatrixXd samples, std::uint64_t seed, std::string lineage = {});

  // Row generator driven by the block-seeded sampler; identical (seed, n, row)
  // always reproduces the same table.
  static EmpiricalLaw generate(std::uint64_t seed, std::size_t n, int dim,
                               const std::function<void(NormalSampler&, std::span<double>)>& row,
                               std::string lineage = {});

  int dim() const { return static_cast<int>(samples_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(samples_.rows()); }
  const Eigen::MatrixXd& samples() const { return samples_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& lineage() const { return lineage_; }

  const std::optional<DensityGrid>& density() const { return density_; }
  void attach_density(DensityGrid grid);

 private:
  Eigen::MatrixXd samples_;
  std::uint64_t seed_;
  std::string lineage_;
  std::optional<DensityGrid> density_;
};

// Header "dim,n,seed", one line with those values, then one row per sample.
void write_csv(const EmpiricalLaw& law, const std::string& path);
EmpiricalLaw read_csv(const std::string& path);

struct DistanceEstimate {
  double value = 0.0;
  double se = 0.0;
  std::string method;
  bool lower_bound = false;
  std::vector<std::string> warnings;
};

enum class TvMethod { density_grid, ibp_density };

struct TvOptions {
  TvMethod method = TvMethod::density_grid;
  int grid_points = 0;             // 0: 2048 in one dimension, 256 per axis in two
  double bandwidth_scale = 1.0;    // multiplies the normal-reference bandwidth
  double alternate_bandwidth = 1.5;  // second bandwidth factor for the sensitivity term
  double coverage_tolerance = 0.01;
  int jackknife_groups = 10;
};

// Plug-in L1 distance of kernel density estimates (sup over |f| <= 1 convention,
// i.e. twice the measure-theoretic total variation). Both laws use the
// bandwidth of `f`. Supports dimensions 1 and 2.
DistanceEstimate estimate_tv(const EmpiricalLaw& f, const EmpiricalLaw& g, const TvOptions& options = {});
// Same estimator against a known density, convolved with the identical
// smoothing kernel so the estimator bias cancels.
DistanceEstimate estimate_tv(const EmpiricalLaw& f, const std::function<double(const Eigen::VectorXd&)>& pdf,
                             const TvOptions& options = {});

double silverman_bandwidth(std::span<const double> x);

// d = 1: exact empirical W1. d >= 2: sliced W1 over `directions` random unit vectors (a lower bound).
DistanceEstimate estimate_w1(const EmpiricalLaw& f, const EmpiricalLaw& g, int directions = 64,
                             std::uint64_t seed = 0);
double w1_sorted(std::vector<double> x, std::vector<double> y);
// W1 between a one-dimensional sample and the law with the given quantile function.
DistanceEstimate estimate_w1(const EmpiricalLaw& f, const std::function<double(double)>& quantile);

DistanceEstimate estimate_cf(const EmpiricalLaw& f, const EmpiricalLaw& g, double radius, int grid_points = 128);

// Lower bound of d_k over a random dictionary of sinusoids, radial bumps and
// tanh ramps, each scaled so that sum_{|a|=k} sup|d^a f| = 1 on a grid.
DistanceEstimate estimate_dk(const EmpiricalLaw& f, const EmpiricalLaw& g, int k, int dictionary_size = 256,
                             std::uint64_t seed = 0);

enum class BoundKind { e7, e6, e8b, e8c, e7c, e12a, e12c, chaos_phi };

struct BoundProfile {
  BoundKind kind = BoundKind::e7;
  int q = 1;
  int m = 0;
  int k = 1;
  int p = 1;
  int p_prime = 1;
  double kappa = 0.5;
  double eta = 1.0;
  double delta = 0.5;
  double epsilon = 0.1;
  // norm and distance inputs
  double f_sup = 1.0;           // ||f||_inf
  double df_sup = 1.0;          // ||d_gamma f||_inf
  double prob_small_det = 0.0;  // P(det sigma_F <= eta)
  double c_norm = 1.0;          // C_{q,1}(F) or C_{q+m,1}(F); C_{q(eps),1}(G) for e12c
  double c_norm_g = 0.0;        // C_{q,2}(G) for e8c
  double c_norm_f2 = 1.0;       // C_{q,2}(F) for e8c
  double theta = 1.0;           // theta_kappa(F)
  double theta_g = 1.0;
  double q_f = 0.0;             // Q norms
  double q_g = 0.0;
  double dist = 0.0;            // d_k or d_p(F, G)
  double dist_det = 0.0;        // d_p'(det sigma_F, det sigma_G or H)
  double h_inverse_norm = 0.0;  // ||H^{-1}||_{2/eps} (reference variable H in place of det sigma_G)
  double x = 0.0;               // argument of Phi for chaos_phi
};

struct BoundValue {
  double value = 0.0;     // right-hand side without the free constant C
  double exponent = 0.0;  // exponent applied to the distance / delta term, when meaningful
};

BoundValue bound_rhs(const BoundProfile& profile);
int q_of_epsilon(int p, int p_prime, double epsilon);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_lo = 0.0;
  double slope_hi = 0.0;
  double slope_se = 0.0;
};

// Least squares of log value on log scale, 95% t interval on the slope.
RateFit fit_rate(std::span<const double> scales, std::span<const double> values);

// Constant fitted at one calibration point: c = lhs[i] / rhs[i].
double calibrate_constant(std::span<const double> lhs, std::span<const double> rhs, std::size_t index);
// lhs <= c rhs + z se at every point.
bool bound_holds(std::span<const double> lhs, std::span<const double> lhs_se, std::span<const double> rhs, double c,
                 double z = 3.0);

}  // namespace regtv
