#pragma once

// Seeded random streams. Boost distributions are used instead of <random>
// ones because their output sequences are identical across standard libraries.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace dnayield {

/// Independent child seed for stream `k` (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return boost::random::uniform_01<double>{}(engine_); }
  double uniform(double lo, double hi) {
    return boost::random::uniform_real_distribution<double>{lo, hi}(engine_);
  }
  /// Inclusive integer range.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return boost::random::uniform_int_distribution<std::int64_t>{lo, hi}(engine_);
  }
  double normal(double mu = 0.0, double sigma = 1.0) {
    return boost::random::normal_distribution<double>{mu, sigma}(engine_);
  }
  std::int64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    return boost::random::poisson_distribution<std::int64_t, double>{mean}(engine_);
  }
  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return boost::random::bernoulli_distribution<double>{p}(engine_);
  }
  /// Gamma with the given shape and scale.
  double gamma(double shape, double scale) {
    return boost::random::gamma_distribution<double>{shape, scale}(engine_);
  }
  /// Negative binomial via the gamma-poisson mixture; var = mu + mu^2/size.
  std::int64_t negative_binomial(double mu, double size) {
    return poisson(gamma(size, mu / size));
  }

  /// Uniform random subset of {0..n-1} of size k, returned in ascending order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (k >= n) return idx;
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = static_cast<std::size_t>(
          uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n - 1)));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
  }

  /// Fisher-Yates permutation of {0..n-1}.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
      std::swap(idx[i - 1], idx[j]);
    }
    return idx;
  }

  boost::random::mt19937_64& engine() { return engine_; }

 private:
  boost::random::mt19937_64 engine_;
};

}  // namespace dnayield
