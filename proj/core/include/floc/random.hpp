#pragma once

// Seeded generator with a pinned algorithm so that splits, initial weights
// and simulator streams are reproducible across standard libraries.
//
// Engine: std::mt19937_64 (output sequence fixed by the C++ standard).
// uniform01:  (x >> 11) * 2^-53, in [0, 1).
// index(n):   rejection sampling on the raw 64-bit output, x % n.
// normal():   Box-Muller, cosine branch, u1 taken as 1 - uniform01.
// shuffle:    Fisher-Yates from the back, j = index(i + 1).

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace floc {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t index(std::uint64_t n);
  double normal(double mean = 0.0, double stddev = 1.0);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(index(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace floc
