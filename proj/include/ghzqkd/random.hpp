#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace ghzqkd {

/// Seeded random stream with a platform-independent output sequence.
///
/// std::mt19937_64 is fully specified by the standard, but the standard
/// distributions are not, so uniform doubles and bounded integers are
/// derived from raw engine output here.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(mix(seed)) {}

  /// Independent substream of a master seed. Stream ids are fixed offsets
  /// (party index, source, adversary), so the same master seed always
  /// yields the same family of streams.
  static RandomStream derive(std::uint64_t master_seed, std::uint64_t stream_id) {
    return RandomStream(mix(master_seed) ^ mix(stream_id + 0x9e3779b97f4a7c15ULL));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on {0, ..., bound-1}; rejection sampling removes modulo bias.
  std::uint64_t index(std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = next();
    while (draw >= limit) draw = next();
    return draw % bound;
  }

  /// Uniform ±1.
  int sign() { return (next() >> 63) != 0 ? -1 : 1; }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace ghzqkd
