#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace stackbench {

/// SplitMix64 finalizer. Used for every seed derivation in the library.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for task `key` under `seed`; order-sensitive, stable forever.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) noexcept {
  return splitmix64(splitmix64(seed) ^ (key + 0x632BE59BD9B4E019ULL));
}

template <class... Keys>
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key, Keys... rest) noexcept {
  return derive_seed(derive_seed(seed, key), static_cast<std::uint64_t>(rest)...);
}

/// FNV-1a 64-bit; turns stable string keys (algorithm names, spec documents)
/// into seed-derivation keys.
constexpr std::uint64_t hash_key(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Deterministic random stream.
///
/// Engine: std::mt19937_64 (bit-exact by the C++ standard) seeded with
/// splitmix64(master_seed). All conversions to doubles, Gaussians, bounded
/// integers and shuffles are implemented here rather than with <random>
/// distributions, whose outputs differ between standard libraries. Together
/// this makes every sequence reproducible on every conforming platform.
/// Changing any of it is a breaking change to all stored results.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t master_seed)
      : seed_(master_seed), engine_(splitmix64(master_seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Independent stream for a sub-task; depends only on (seed, key), never
  /// on how much of this stream was consumed.
  SeededRng child(std::uint64_t key) const { return SeededRng(derive_seed(seed_, key)); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the Box-Muller transform; pairs are cached.
  double normal();

  /// Uniform integer in [0, bound), bound > 0 (Lemire's unbiased method).
  std::uint64_t below(std::uint64_t bound);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace stackbench
