#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace igbd {

// Portable random stream. std::*_distribution output is implementation
// defined, so every draw is derived from raw mt19937_64 bits here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n).
  std::size_t index(std::size_t n);

  // Standard normal via Box-Muller (one draw per call; the pair's second
  // value is discarded to keep the stream position simple to reason about).
  double normal();

  // Sample from an unnormalized discrete distribution.
  std::size_t categorical(const std::vector<double>& probs);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Mixes a base seed with a stream index (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace igbd
