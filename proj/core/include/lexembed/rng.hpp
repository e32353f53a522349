#pragma once

#include <cstdint>

namespace lexembed {

// splitmix64 generator. Self-contained so that seeded runs are bit-identical
// across platforms and standard-library versions; the reproducibility
// guarantees of training and the equivalence tests depend on that.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Derives a well-separated stream for worker `stream` of a run seeded with
  // `seed`. The finalizer scrambles the state so streams do not overlap as
  // shifted copies of one orbit.
  static Rng for_stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix(seed + 0x9e3779b97f4a7c15ull * (stream + 1)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Uniform in [0, 1), 24 bits of mantissa.
  float next_float01() {
    return static_cast<float>(next_u64() >> 40) * 0x1p-24f;
  }

  // Uniform in [0, 1), 53 bits of mantissa.
  double next_double01() {
    return static_cast<double>(next_u64() >> 11) * 0x1p-53;
  }

  bool bernoulli(double p) { return next_double01() < p; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace lexembed
