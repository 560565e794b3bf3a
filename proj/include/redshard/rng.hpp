#pragma once

#include <cstdint>
#include <limits>

namespace redshard {

/// SplitMix64 output function applied to one 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent child seed from a master seed and a path of labels.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0) {
  return mix64(mix64(master ^ mix64(a + 0x632be59bd9b4e019ULL)) ^
               mix64(b + 0x8cb92ba72f3d8dd7ULL));
}

/// Named stream labels. Per-thread service streams use kService + thread id.
enum class StreamLabel : std::uint64_t {
  kArrivals = 1,
  kCodeMix = 2,
  kWorkload = 3,
  kSimulation = 4,
  kCoupledClock = 5,
  kCoupledPick = 6,
  kPolicy = 7,
  kService = 1000,
};

constexpr std::uint64_t label(StreamLabel l, std::uint64_t offset = 0) {
  return static_cast<std::uint64_t>(l) + offset;
}

/// Counter-based random stream: the n-th output is a pure function of
/// (key, n), so streams can be split and replayed without shared state.
/// Satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(derive_seed(seed, stream)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace redshard
