#pragma once

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, index, sub), so results do not depend on evaluation order or on
// how work is split across threads.

#include <cstdint>

namespace cfn {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream tags keep independent uses of one seed apart.
enum class Stream : std::uint64_t {
  kSpins = 1,
  kTruthParams = 2,
  kEstimateParams = 3,
  kTopology = 4,
  kStarts = 5,
  kTest = 99,
};

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, Stream stream = Stream::kSpins)
      : key_(mix64(mix64(seed) ^ static_cast<std::uint64_t>(stream))) {}

  std::uint64_t bits(std::uint64_t index, std::uint64_t sub = 0) const {
    return mix64(mix64(key_ ^ mix64(index)) ^ sub);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint64_t index, std::uint64_t sub = 0) const {
    return static_cast<double>(bits(index, sub) >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi, std::uint64_t index, std::uint64_t sub = 0) const {
    return lo + (hi - lo) * uniform(index, sub);
  }

 private:
  std::uint64_t key_;
};

}  // namespace cfn
