#pragma once

// Deterministic seeded random streams. Every run is reproduced bit-for-bit
// from (config, seed) on any platform, so no std::random distributions are
// used anywhere: splitmix64 outputs are reduced with fixed-width arithmetic.
//
// Consumption discipline: next_u64(), below(), bernoulli() and unit() each
// consume exactly one 64-bit output of the stream.

#include <cstdint>
#include <string_view>

namespace lmx {

class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform on {0, ..., bound-1} via 128-bit multiply-high; the residual
  // bias is bound/2^64 and irrelevant at simulation scale.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  // Uniform double in [0, 1) with 53 bits.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return unit() < p; }

  // Geometric number of failures before the first success, success
  // probability p per trial. One draw.
  std::int64_t geometric(double p) {
    if (p >= 1.0) return 0;
    double u = unit();
    if (u <= 0.0) u = 0x1.0p-53;
    std::int64_t k = 0;
    double q = 1.0 - p;
    double acc = q;
    // Inverse CDF walk; interarrival parameters keep this short.
    while (u < acc && k < (1 << 30)) {
      ++k;
      acc *= q;
    }
    return k;
  }

  // Independent named substream of a master seed. FNV-1a over the tag and
  // index keeps stream assignment stable across refactors.
  static Rng derive(std::uint64_t seed, std::string_view tag,
                    std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= 0x100000001b3ull;
      }
    };
    mix(seed);
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    mix(index);
    return Rng(h);
  }

 private:
  std::uint64_t state_ = 0x853c49e6748fea9bull;
};

}  // namespace lmx
