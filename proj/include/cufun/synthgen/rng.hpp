#pragma once

// Reproducible random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Each stream is seeded with splitmix64(seed) mixed with
// splitmix64(stream), so (seed, stream) pairs give independent, reproducible
// streams. The variate transforms below are implemented here rather than taken
// from <random>, whose distributions are implementation-defined.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace cufun {

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  double normal();
  double exponential(double rate);
  // Marsaglia-Tsang; shape > 0, scale > 0.
  double gamma(double shape, double scale);
  double lognormal(double mu, double sigma);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cufun
