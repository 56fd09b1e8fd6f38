#pragma once

// Deterministic random streams. Everything here is defined bit-for-bit by
// this header so results do not depend on the standard library's
// distribution implementations.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace loanvar::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stateless hash of (seed, a, b): the counter-based stream used for
// per-cell draws, so a value never depends on the order cells are visited.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a,
                                     std::uint64_t b = 0) noexcept {
  std::uint64_t z = mix64(seed + kGolden);
  z = mix64(z ^ (a * kGolden + 0x632BE59BD9B4E019ULL));
  z = mix64(z ^ (b * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
  return z;
}

// FNV-1a, for deriving labelled sub-seeds.
constexpr std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Seed for a named component; adding a new label never shifts another's.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                    std::uint64_t index = 0) noexcept {
  return counter_hash(master, hash_label(label), index);
}

// Top 53 bits as a double in [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    state_ += kGolden;
    return mix64(state_);
  }

  // [0, 1)
  double uniform() noexcept { return to_unit((*this)()); }

  // (0, 1], safe under log.
  double uniform_open_left() noexcept { return 1.0 - uniform(); }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % bound;
  }

  // Box-Muller, one draw per call.
  double normal() noexcept {
    const double u1 = uniform_open_left();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential() noexcept { return -std::log(uniform_open_left()); }

 private:
  std::uint64_t state_;
};

// In-place Fisher-Yates with the engine above.
template <typename Container>
void shuffle(Container& items, SplitMix64& gen) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = gen.below(i);
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace loanvar::rng
