#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace boolattn {

// std::mt19937_64 has a fully specified output sequence; the standard
// distributions do not, so the conversions below are written out to keep
// every stream reproducible across standard libraries.
using Engine = std::mt19937_64;

/// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stable seed derivation from an ordered list of words.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t w : words) h = mix64(h ^ mix64(w));
  return h;
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Engine& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform on [lo, hi].
inline double uniform(Engine& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [0, bound) by rejection on the top bits.
inline std::uint64_t uniform_below(Engine& rng, std::uint64_t bound) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  for (;;) {
    const std::uint64_t r = rng();
    if (r < limit) return r % bound;
  }
}

/// Hands out single random bits, 64 per engine draw.
class BitSource {
 public:
  explicit BitSource(Engine& rng) : rng_(rng) {}
  bool next() {
    if (left_ == 0) {
      word_ = rng_();
      left_ = 64;
    }
    const bool bit = (word_ & 1U) != 0;
    word_ >>= 1;
    --left_;
    return bit;
  }

 private:
  Engine& rng_;
  std::uint64_t word_ = 0;
  int left_ = 0;
};

}  // namespace boolattn
