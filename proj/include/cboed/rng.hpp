#pragma once

#include <cstdint>

namespace cboed {

// Purpose tags keep the streams used by different parts of a study disjoint.
enum class Stream : std::uint64_t {
  kPrior = 0x7072696f72ULL,       // "prior"
  kRejection = 0x72656a656374ULL,  // "reject"
  kSensors = 0x73656e736f72ULL,    // "sensor"
  kWeights = 0x776569676874ULL,    // "weight"
};

// Counter-based generator: every draw is a pure function of
// (seed, stream, index), so results never depend on evaluation order or on
// how work is split across threads. The mixing function is the splitmix64
// finalizer applied twice.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, Stream stream) noexcept
      : key_(mix(seed ^ mix(static_cast<std::uint64_t>(stream)))) {}

  constexpr std::uint64_t bits(std::uint64_t index) const noexcept {
    return mix(key_ + (index + 1) * kGolden);
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  constexpr double uniform(std::uint64_t index) const noexcept {
    return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(std::uint64_t index, double lo, double hi) const noexcept {
    return lo + (hi - lo) * uniform(index);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace cboed
