#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>

namespace regtv {

// Samples are generated in fixed-size blocks; block b of a stream seeded with s
// uses the generator seeded with substream_seed(s, b). Results therefore do not
// depend on how many workers run the blocks.
inline constexpr std::size_t kBlockSize = 4096;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

// Worker count from REGTV_WORKERS, else hardware concurrency (at least 1).
int worker_count();

class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  double operator()() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  void fill(std::span<double> out) {
    for (double& v : out) v = normal_(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Calls body(block, begin, end) for every block of [0, n), spread over
// worker_count() threads. Bodies must only write to per-index storage.
void for_each_block(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

// n x dim matrix of independent standard normals, row r drawn from block r / kBlockSize.
Eigen::MatrixXd standard_normals(std::uint64_t seed, std::size_t n, int dim);

// Generic per-sample evaluation: out[i] = f(sampler_for_block, i) with the
// sampler advanced sequentially inside each block.
Eigen::VectorXd sample_scalar(std::uint64_t seed, std::size_t n,
                              const std::function<double(NormalSampler&, std::size_t)>& f);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  bool exact = false;
};

double pairwise_sum(std::span<const double> x);
Estimate mean_estimate(std::span<const double> x);
inline Estimate mean_estimate(const Eigen::VectorXd& x) { return mean_estimate(std::span<const double>(x.data(), x.size())); }

}  // namespace regtv
