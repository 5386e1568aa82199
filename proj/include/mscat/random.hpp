#pragma once

// Counter-based random streams. A stream is identified by a 64-bit key; the
// i-th draw is splitmix64(key + (i + 1) * golden_gamma), so any draw can be
// recomputed without replaying the ones before it. This is the generator
// recorded in dataset manifests as "splitmix64-counter/box-muller".

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string_view>
#include <utility>

namespace mscat {

inline constexpr std::string_view kGeneratorName = "splitmix64-counter/box-muller";

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Order-sensitive combination of several integers into one 64-bit key.
constexpr std::uint64_t mix_keys(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p + kGoldenGamma));
  return h;
}

/// 64-bit FNV-1a; used for scene digests.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() {
    ++counter_;
    return splitmix64(key_ + counter_ * kGoldenGamma);
  }

  /// Uniform in (0, 1); never returns 0 so log() is safe.
  double next_open_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Pair of independent standard normals (Box-Muller).
  std::pair<double, double> next_normal_pair() {
    const double u1 = next_open_unit();
    const double u2 = next_open_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mscat
