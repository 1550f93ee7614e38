#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace noisebench {

/// SplitMix64 finalizer; full-avalanche 64-bit mix.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// FNV-1a 64 of a byte string (image ids).
constexpr std::uint64_t hash_id(std::string_view id) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : id) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Per-task seed: splitmix64(splitmix64(splitmix64(global) ^ item) ^ index).
/// Depends only on its arguments, never on execution order.
constexpr std::uint64_t derive_seed(std::uint64_t global, std::uint64_t item,
                                    std::uint64_t index) noexcept {
  return splitmix64(splitmix64(splitmix64(global) ^ item) ^ index);
}

/// Seeded stream: std::mt19937_64 (bit-exact across standard libraries),
/// uniform reals from the top 53 bits.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace noisebench
