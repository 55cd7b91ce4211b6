#include "regtv/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <set>

using namespace regtv;

TEST(Random, SubstreamSeedsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t b = 0; b < 1000; ++b) seen.insert(substream_seed(42, b));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(substream_seed(42, 3), substream_seed(42, 3));
  EXPECT_NE(substream_seed(42, 3), substream_seed(43, 3));
}

TEST(Random, StandardNormalsMoments) {
  const std::size_t n = 200000;
  const Eigen::MatrixXd x = standard_normals(11, n, 3);
  for (int c = 0; c < 3; ++c) {
    const double mean = x.col(c).mean();
    const double var = (x.col(c).array() - mean).square().sum() / (n - 1);
    EXPECT_LT(std::abs(mean), 5.0 / std::sqrt(n));
    EXPECT_LT(std::abs(var - 1.0), 5.0 * std::sqrt(2.0 / n));
  }
}

TEST(Random, IndependentOfWorkerCount) {
  const char* old = std::getenv("REGTV_WORKERS");
  const std::string saved = old ? old : "";
  setenv("REGTV_WORKERS", "1", 1);
  const Eigen::MatrixXd a = standard_normals(5, 3 * kBlockSize + 17, 2);
  setenv("REGTV_WORKERS", "3", 1);
  const Eigen::MatrixXd b = standard_normals(5, 3 * kBlockSize + 17, 2);
  if (old) setenv("REGTV_WORKERS", saved.c_str(), 1);
  else unsetenv("REGTV_WORKERS");
  EXPECT_EQ(a, b);
}

TEST(Random, BlockLayout) {
  const Eigen::MatrixXd x = standard_normals(9, kBlockSize + 2, 1);
  NormalSampler s(substream_seed(9, 1));
  EXPECT_EQ(x(static_cast<Eigen::Index>(kBlockSize), 0), s());
}

TEST(Random, MeanEstimate) {
  Eigen::VectorXd c = Eigen::VectorXd::Constant(1000, 2.5);
  const Estimate e = mean_estimate(c);
  EXPECT_DOUBLE_EQ(e.value, 2.5);
  EXPECT_DOUBLE_EQ(e.se, 0.0);
  Eigen::VectorXd alt(4);
  alt << 1, -1, 1, -1;
  EXPECT_NEAR(mean_estimate(alt).se, std::sqrt(4.0 / 3.0 / 4.0), 1e-15);
}

TEST(Random, PairwiseSumIsAccurate) {
  std::vector<double> v(1 << 20, 0.1);
  EXPECT_NEAR(pairwise_sum(v), 0.1 * (1 << 20), 1e-8);
}
