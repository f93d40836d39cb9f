#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "divsample/error.hpp"

namespace divsample {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of an independent substream keyed by (root, a, b).
///
/// Used for per-draw streams: (root seed, domain index, draw index) always
/// maps to the same generator state, whatever order draws are executed in.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
  return mix64(mix64(mix64(root) ^ a) ^ mix64(b + 0x632be59bd9b4e019ULL));
}

inline Rng substream(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) {
  return Rng(derive_seed(root, a, b));
}

/// FNV-1a, for keying substreams by string tags.
constexpr std::uint64_t hash_tag(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename Urbg>
double uniform01(Urbg& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Draws index i with probability mass[i] / sum(mass). Masses must be >= 0
/// with a positive total.
template <typename Urbg>
std::size_t draw_categorical(std::span<const double> mass, Urbg& rng) {
  double total = 0.0;
  for (double m : mass) total += m;
  if (!(total > 0.0)) throw NumericError("categorical draw with zero total mass");

  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = mass.size();
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] <= 0.0) continue;
    acc += mass[i];
    last_positive = i;
    if (u < acc) return i;
  }
  // u landed past the accumulated total through round-off
  return last_positive;
}

}  // namespace divsample
