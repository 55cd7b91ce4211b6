#include "regtv/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace regtv {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

int worker_count() {
  if (const char* env = std::getenv("REGTV_WORKERS")) {
    try {
      int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void for_each_block(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
  const std::size_t blocks = (n + kBlockSize - 1) / kBlockSize;
  const int workers = static_cast<int>(std::min<std::size_t>(worker_count(), blocks));
  auto run_block = [&](std::size_t b) { body(b, b * kBlockSize, std::min(n, (b + 1) * kBlockSize)); };
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t b = static_cast<std::size_t>(w); b < blocks; b += static_cast<std::size_t>(workers)) run_block(b);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Eigen::MatrixXd standard_normals(std::uint64_t seed, std::size_t n, int dim) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), dim);
  for_each_block(n, [&](std::size_t b, std::size_t begin, std::size_t end) {
    NormalSampler s(substream_seed(seed, b));
    for (std::size_t i = begin; i < end; ++i) {
      for (int j = 0; j < dim; ++j) out(static_cast<Eigen::Index>(i), j) = s();
    }
  });
  return out;
}

Eigen::VectorXd sample_scalar(std::uint64_t seed, std::size_t n,
                              const std::function<double(NormalSampler&, std::size_t)>& f) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for_each_block(n, [&](std::size_t b, std::size_t begin, std::size_t end) {
    NormalSampler s(substream_seed(seed, b));
    for (std::size_t i = begin; i < end; ++i) out[static_cast<Eigen::Index>(i)] = f(s, i);
  });
  return out;
}

double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 16) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.subspan(0, half)) + pairwise_sum(x.subspan(half));
}

Estimate mean_estimate(std::span<const double> x) {
  Estimate e;
  if (x.empty()) return e;
  const double n = static_cast<double>(x.size());
  e.value = pairwise_sum(x) / n;
  if (x.size() > 1) {
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - e.value) * (x[i] - e.value);
    e.se = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  }
  return e;
}

}  // namespace regtv
