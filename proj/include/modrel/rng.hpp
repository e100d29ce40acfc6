#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "modrel/normal.hpp"

namespace modrel {

// splitmix64 finalizer; used to derive independent stream seeds from a base seed.
inline constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t base,
                                           std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t s = mix_seed(base);
  for (auto k : keys) s = mix_seed(s ^ mix_seed(k + 0x632be59bd9b4e019ULL));
  return s;
}

/// Seeded random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Uniform and normal variates are produced here rather than by
/// the <random> distributions so that draws are identical across standard
/// library implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double low, double high) { return low + (high - low) * uniform(); }

  // Integer uniform on [0, n).
  std::uint64_t below(std::uint64_t n) {
    // rejection keeps the draw unbiased
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  double normal() { return normal_quantile(uniform()); }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace modrel
